#include "tann/batch.hpp"

namespace tann {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::R1: return "r1";
    case Variant::R2: return "r2";
    default: return "r3";
  }
}

bool parse_variant(const std::string& s, Variant& out) {
  if (s == "full") out = Variant::Full;
  else if (s == "r1") out = Variant::R1;
  else if (s == "r2") out = Variant::R2;
  else if (s == "r3") out = Variant::R3;
  else return false;
  return true;
}

}  // namespace tann
