#include "tann/montage.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tann/error.hpp"

namespace tann {

int ElectrodeMontage::region_index(const std::string& name) const {
  for (int i = 0; i < num_regions(); ++i)
    if (region_names[i] == name) return i;
  return -1;
}

int ElectrodeMontage::electrode_index(const std::string& name) const {
  for (int i = 0; i < size(); ++i)
    if (electrodes[i].name == name) return i;
  return -1;
}

std::vector<int> ElectrodeMontage::reorder_map() const {
  std::vector<int> out;
  out.reserve(electrodes.size());
  for (const auto& members : region_members)
    for (int e : members) out.push_back(e);
  return out;
}

std::vector<int> ElectrodeMontage::inverse_reorder_map() const {
  const auto fwd = reorder_map();
  std::vector<int> inv(fwd.size());
  for (std::size_t k = 0; k < fwd.size(); ++k) inv[std::size_t(fwd[k])] = int(k);
  return inv;
}

std::vector<RegionSlice> ElectrodeMontage::region_slices() const {
  std::vector<RegionSlice> slices;
  int begin = 0;
  for (int r = 0; r < num_regions(); ++r) {
    const int w = int(region_members[std::size_t(r)].size());
    slices.push_back({r, begin, w});
    begin += w;
  }
  return slices;
}

void validate_montage(const ElectrodeMontage& m) {
  if (m.electrodes.empty()) throw ValidationError("montage: no electrodes");
  if (m.region_names.empty()) throw ValidationError("montage: no regions");

  std::set<std::string> names;
  std::set<std::pair<int, int>> cells;
  for (const auto& e : m.electrodes) {
    if (e.name.empty()) throw ValidationError("montage: empty electrode name");
    if (!names.insert(e.name).second)
      throw ValidationError("montage: duplicate electrode '" + e.name + "'");
    if (e.row < 0 || e.col < 0)
      throw ValidationError("montage: electrode '" + e.name + "' has negative grid position");
    if (!cells.insert({e.row, e.col}).second)
      throw ValidationError("montage: two electrodes share grid cell (" +
                            std::to_string(e.row) + "," + std::to_string(e.col) +
                            "), second is '" + e.name + "'");
    if (e.region < 0 || e.region >= m.num_regions())
      throw ValidationError("montage: electrode '" + e.name + "' has no valid region");
  }

  // region_members must partition the electrode set.
  std::vector<int> seen(m.electrodes.size(), 0);
  if (int(m.region_members.size()) != m.num_regions())
    throw ValidationError("montage: region table size mismatch");
  for (int r = 0; r < m.num_regions(); ++r) {
    if (m.region_members[std::size_t(r)].empty())
      throw ValidationError("montage: region '" + m.region_names[std::size_t(r)] + "' is empty");
    for (int e : m.region_members[std::size_t(r)]) {
      if (e < 0 || e >= m.size()) throw ValidationError("montage: region member out of range");
      if (m.electrodes[std::size_t(e)].region != r)
        throw ValidationError("montage: electrode '" + m.electrodes[std::size_t(e)].name +
                              "' listed in region '" + m.region_names[std::size_t(r)] +
                              "' but assigned elsewhere (region overlap)");
      if (seen[std::size_t(e)]++)
        throw ValidationError("montage: electrode '" + m.electrodes[std::size_t(e)].name +
                              "' appears in two regions (region overlap)");
    }
  }
  for (std::size_t e = 0; e < seen.size(); ++e)
    if (!seen[e])
      throw ValidationError("montage: electrode '" + m.electrodes[e].name + "' not in any region");

  const auto check_perm = [&](const std::vector<int>& order, const char* what) {
    if (int(order.size()) != m.size())
      throw ValidationError(std::string("montage: ") + what + " scan is not a permutation");
    std::vector<int> hit(order.size(), 0);
    for (int e : order) {
      if (e < 0 || e >= m.size() || hit[std::size_t(e)]++)
        throw ValidationError(std::string("montage: ") + what + " scan is not a permutation");
    }
  };
  check_perm(m.scans.horizontal, "horizontal");
  check_perm(m.scans.vertical, "vertical");
}

// Serpentine scan orders. Horizontal: grid rows ascending; inside a row,
// columns ascend on even row indices and descend on odd ones. Vertical is the
// transpose rule. Parity is taken from the grid index, not from the visit
// sequence, so sparse grids stay deterministic.
static PredecessorMap build_scans(const std::vector<Electrode>& es) {
  std::vector<int> idx(es.size());
  for (std::size_t i = 0; i < es.size(); ++i) idx[i] = int(i);

  PredecessorMap out;
  out.horizontal = idx;
  std::sort(out.horizontal.begin(), out.horizontal.end(), [&](int a, int b) {
    const auto& ea = es[std::size_t(a)];
    const auto& eb = es[std::size_t(b)];
    if (ea.row != eb.row) return ea.row < eb.row;
    return (ea.row % 2 == 0) ? ea.col < eb.col : ea.col > eb.col;
  });
  out.vertical = idx;
  std::sort(out.vertical.begin(), out.vertical.end(), [&](int a, int b) {
    const auto& ea = es[std::size_t(a)];
    const auto& eb = es[std::size_t(b)];
    if (ea.col != eb.col) return ea.col < eb.col;
    return (ea.col % 2 == 0) ? ea.row < eb.row : ea.row > eb.row;
  });
  return out;
}

ElectrodeMontage make_montage(std::vector<Electrode> electrodes,
                              std::vector<std::string> region_names) {
  ElectrodeMontage m;
  m.electrodes = std::move(electrodes);
  m.region_names = std::move(region_names);
  m.region_members.assign(m.region_names.size(), {});
  for (int i = 0; i < m.size(); ++i) {
    const int r = m.electrodes[std::size_t(i)].region;
    if (r < 0 || r >= m.num_regions())
      throw ValidationError("montage: electrode '" + m.electrodes[std::size_t(i)].name +
                            "' has region index out of range");
    m.region_members[std::size_t(r)].push_back(i);
  }
  m.scans = build_scans(m.electrodes);
  validate_montage(m);
  return m;
}

ElectrodeMontage parse_montage(std::istream& in, const std::string& origin) {
  std::vector<Electrode> electrodes;
  std::vector<std::string> region_names;
  std::map<std::string, int> region_ids;
  std::map<std::string, std::string> electrode_region;  // for overlap diagnostics

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string name;
    if (!(ls >> name)) continue;  // blank / comment-only line
    int row = 0, col = 0;
    std::string region;
    if (!(ls >> row >> col >> region))
      throw ValidationError(origin + ":" + std::to_string(lineno) +
                            ": expected 'NAME ROW COL REGION_NAME'");
    std::string extra;
    if (ls >> extra)
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": trailing token '" +
                            extra + "'");

    const auto prev = electrode_region.find(name);
    if (prev != electrode_region.end()) {
      if (prev->second != region)
        throw ValidationError(origin + ":" + std::to_string(lineno) + ": electrode '" + name +
                              "' listed in regions '" + prev->second + "' and '" + region +
                              "' (region overlap)");
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": duplicate electrode '" +
                            name + "'");
    }
    electrode_region[name] = region;

    auto it = region_ids.find(region);
    if (it == region_ids.end()) {
      it = region_ids.emplace(region, int(region_names.size())).first;
      region_names.push_back(region);
    }
    electrodes.push_back({name, row, col, it->second});
  }
  if (electrodes.empty()) throw ValidationError(origin + ": no electrodes found");
  return make_montage(std::move(electrodes), std::move(region_names));
}

ElectrodeMontage load_montage(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("montage: cannot open '" + path + "'");
  ElectrodeMontage m = parse_montage(in, path);
  if (m.size() != 62)
    throw ValidationError("montage '" + path + "': expected 62 electrodes, found " +
                          std::to_string(m.size()));
  if (m.num_regions() != 16)
    throw ValidationError("montage '" + path + "': expected 16 regions, found " +
                          std::to_string(m.num_regions()));
  return m;
}

const ElectrodeMontage& default_montage() {
  static const ElectrodeMontage m = [] {
    std::istringstream in(default_montage_text());
    ElectrodeMontage built = parse_montage(in, "<builtin montage>");
    if (built.size() != 62 || built.num_regions() != 16)
      throw ValidationError("builtin montage corrupted");
    return built;
  }();
  return m;
}

}  // namespace tann
