#include "tubalreg/rng.hpp"

namespace tubalreg {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag,
                          std::uint64_t index) noexcept {
  // FNV-1a over the tag, folded with the parent key and index.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(mix64(parent ^ 0x9e3779b97f4a7c15ULL) ^ mix64(h) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

CounterRng::result_type CounterRng::at(std::uint64_t i) const noexcept {
  return mix64(key_ + 0x9e3779b97f4a7c15ULL * (i + 1));
}

CounterRng CounterRng::substream(std::string_view tag, std::uint64_t index) const noexcept {
  return CounterRng(derive_seed(key_, tag, index));
}

double CounterRng::uniform() noexcept {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

}  // namespace tubalreg
