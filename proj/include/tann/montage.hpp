#pragma once
#include <iosfwd>
#include <string>
#include <vector>

namespace tann {

// Electrode layout on a sparse 2-D scalp grid plus a partition into brain
// regions. The electrode order in the montage is the column order of input
// feature matrices.
struct Electrode {
  std::string name;
  int row = 0;
  int col = 0;
  int region = -1;  // index into region_names
};

// Column range of one region inside the region-reordered feature layout.
struct RegionSlice {
  int region = 0;
  int begin = 0;
  int width = 0;
};

// Scan sequences for the two directional RNN axes. Each is a permutation of
// electrode indices; the predecessor of the k-th element is the (k-1)-th,
// which makes both traversal graphs acyclic by construction.
struct PredecessorMap {
  std::vector<int> horizontal;  // serpentine by grid row, alternating column direction
  std::vector<int> vertical;    // serpentine by grid column, alternating row direction
};

struct ElectrodeMontage {
  std::vector<Electrode> electrodes;
  std::vector<std::string> region_names;         // order of first appearance
  std::vector<std::vector<int>> region_members;  // electrode indices, input order
  PredecessorMap scans;

  int size() const { return int(electrodes.size()); }
  int num_regions() const { return int(region_names.size()); }
  int region_index(const std::string& name) const;  // -1 if absent
  int electrode_index(const std::string& name) const;

  // Permutation taking input electrode order to region-grouped order:
  // reordered column k holds electrode reorder_map()[k].
  std::vector<int> reorder_map() const;
  std::vector<int> inverse_reorder_map() const;
  std::vector<RegionSlice> region_slices() const;
};

// General structural validation: nonempty, unique names, unique grid cells,
// every electrode in exactly one region, contiguous region indices.
void validate_montage(const ElectrodeMontage& m);

// Build from parts and compute scan orders; used for toy layouts in tests.
ElectrodeMontage make_montage(std::vector<Electrode> electrodes,
                              std::vector<std::string> region_names);

// Text format, one electrode per line: NAME ROW COL REGION_NAME ('#' comments).
ElectrodeMontage parse_montage(std::istream& in, const std::string& origin);

// Load from file and additionally require the full-headset contract:
// exactly 62 electrodes and exactly 16 regions.
ElectrodeMontage load_montage(const std::string& path);

// The bundled 62-channel montage, also shipped at data/montage_seed62.txt.
const char* default_montage_text();
const ElectrodeMontage& default_montage();

}  // namespace tann
