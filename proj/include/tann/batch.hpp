#pragma once
#include <string>
#include <vector>

#include "tann/matrix.hpp"

namespace tann {

// One training item as the network sees it. Target items carry label -1:
// the trainer never receives target labels (see data.hpp for the gate).
struct BatchItem {
  const Matrix* x = nullptr;
  int label = -1;
  bool is_source = false;
  std::string sample_id;
};

enum class Variant { Full, R1, R2, R3 };

// R1 drops both attention branches, R2 keeps only the per-region branch,
// R3 keeps only the global branch. One code path, gated by these two flags.
inline bool variant_has_local(Variant v) { return v == Variant::Full || v == Variant::R2; }
inline bool variant_has_global(Variant v) { return v == Variant::Full || v == Variant::R3; }

const char* variant_name(Variant v);
bool parse_variant(const std::string& s, Variant& out);

}  // namespace tann
