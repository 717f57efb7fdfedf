#include "tann/data.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <set>
#include <sstream>

#include "tann/csvio.hpp"
#include "tann/error.hpp"

namespace tann {

int eval_only_label(const FeatureSample& s) { return s.label_; }

int Dataset::subject_index(const std::string& id) const {
  for (int i = 0; i < (int)subjects.size(); ++i)
    if (subjects[i].id == id) return i;
  return -1;
}

void Dataset::validate() const {
  if (d <= 0 || n <= 0 || classes <= 0)
    throw ValidationError("dataset '" + name + "': d, n, classes must be positive");
  if (subjects.empty()) throw ValidationError("dataset '" + name + "': no subjects");
  std::set<std::string> subj_ids;
  int total = 0;
  for (const auto& subj : subjects) {
    if (!subj_ids.insert(subj.id).second)
      throw ValidationError("dataset '" + name + "': duplicate subject '" + subj.id + "'");
    if (subj.trials.empty())
      throw ValidationError("dataset '" + name + "': subject '" + subj.id + "' has no trials");
    std::set<std::string> trial_ids;
    for (const auto& tr : subj.trials) {
      if (!trial_ids.insert(tr.id).second)
        throw ValidationError("dataset '" + name + "': subject '" + subj.id +
                              "' has duplicate trial '" + tr.id + "'");
      if (tr.label < 0 || tr.label >= classes)
        throw ValidationError("dataset '" + name + "': trial '" + subj.id + "/" + tr.id +
                              "' label " + std::to_string(tr.label) + " outside [0, " +
                              std::to_string(classes) + ")");
      if (tr.count <= 0)
        throw ValidationError("dataset '" + name + "': trial '" + subj.id + "/" + tr.id +
                              "' has no samples");
      if (tr.first_sample != total)
        throw ValidationError("dataset '" + name + "': trial '" + subj.id + "/" + tr.id +
                              "' sample range is not contiguous");
      total += tr.count;
    }
  }
  if (total != (int)samples.size())
    throw ValidationError("dataset '" + name + "': trial counts sum to " + std::to_string(total) +
                          " but " + std::to_string(samples.size()) + " samples are present");
  for (const auto& s : samples) {
    if (s.x.rows() != d || s.x.cols() != n)
      throw ValidationError("dataset '" + name + "': sample " + s.sample_id() + " is " +
                            std::to_string(s.x.rows()) + "x" + std::to_string(s.x.cols()) +
                            ", expected " + std::to_string(d) + "x" + std::to_string(n));
  }
  for (int r : planted_regions)
    if (r < 0) throw ValidationError("dataset '" + name + "': negative planted region index");
}

// ---- binary feature files ---------------------------------------------

namespace {

constexpr char kFeatureMagic[8] = {'T', 'A', 'N', 'N', 'F', 'T', '0', '1'};

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((char)((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back((char)((bits >> (8 * i)) & 0xff));
}

struct ByteReader {
  const std::string& buf;
  size_t pos = 0;
  std::string origin;

  void need(size_t k) const {
    if (pos + k > buf.size())
      throw ValidationError(origin + ": truncated (need " + std::to_string(k) + " bytes at " +
                            std::to_string(pos) + ", have " + std::to_string(buf.size() - pos) +
                            ")");
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= (uint32_t)(uint8_t)buf[pos++] << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= (uint64_t)(uint8_t)buf[pos++] << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

std::string feature_blob(const Dataset& ds, const SubjectInfo& subj) {
  std::string out;
  out.append(kFeatureMagic, 8);
  put_u32(out, (uint32_t)ds.d);
  put_u32(out, (uint32_t)ds.n);
  put_u32(out, (uint32_t)subj.trials.size());
  for (const auto& tr : subj.trials) put_u32(out, (uint32_t)tr.count);
  for (const auto& tr : subj.trials)
    for (int k = 0; k < tr.count; ++k) {
      const Matrix& x = ds.samples[tr.first_sample + k].x;
      for (int i = 0; i < x.rows() * x.cols(); ++i) put_f64(out, x.data()[i]);
    }
  return out;
}

// Reads one subject's samples and appends them to ds.samples, filling in
// first_sample/count against the declared trial list.
void read_feature_file(Dataset& ds, SubjectInfo& subj, const std::string& path) {
  const std::string buf = read_file(path);
  ByteReader r{buf, 0, path};
  r.need(8);
  if (std::memcmp(buf.data(), kFeatureMagic, 8) != 0)
    throw ValidationError(path + ": not a feature file (bad magic)");
  r.pos = 8;
  uint32_t d = r.u32(), n = r.u32(), trial_count = r.u32();
  if ((int)d != ds.d || (int)n != ds.n)
    throw ValidationError(path + ": sample shape " + std::to_string(d) + "x" + std::to_string(n) +
                          " does not match manifest " + std::to_string(ds.d) + "x" +
                          std::to_string(ds.n));
  if (trial_count != subj.trials.size())
    throw ValidationError(path + ": " + std::to_string(trial_count) +
                          " trials, manifest declares " + std::to_string(subj.trials.size()));
  for (auto& tr : subj.trials) {
    uint32_t count = r.u32();
    if ((int)count != tr.count)
      throw ValidationError(path + ": trial '" + tr.id + "' has " + std::to_string(count) +
                            " samples, manifest declares " + std::to_string(tr.count));
  }
  for (auto& tr : subj.trials) {
    tr.first_sample = (int)ds.samples.size();
    for (int k = 0; k < tr.count; ++k) {
      Matrix x(ds.d, ds.n);
      for (int i = 0; i < ds.d * ds.n; ++i) x.data()[i] = r.f64();
      ds.samples.emplace_back(subj.id, tr.id, k, std::move(x), tr.label);
    }
  }
  if (r.pos != buf.size())
    throw ValidationError(path + ": " + std::to_string(buf.size() - r.pos) +
                          " trailing bytes after sample data");
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

int parse_int_field(const std::string& tok, const std::string& what, const std::string& where) {
  try {
    size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ValidationError(where + ": bad " + what + " '" + tok + "'");
  }
}

}  // namespace

// ---- manifest ----------------------------------------------------------
//
//   tann-manifest v1
//   name <dataset>
//   shape <d> <n> <classes>
//   planted <r0> <r1> ...          (optional)
//   subject <id> <file>
//   trial <id> <label> <count>     (belongs to the last subject line)

Dataset load_dataset(const std::string& manifest_path) {
  const std::string text = read_file(manifest_path);
  Dataset ds;
  bool header_seen = false, name_seen = false, shape_seen = false;
  int lineno = 0;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    const std::string where = manifest_path + ":" + std::to_string(lineno);
    if (!header_seen) {
      if (toks.size() != 2 || toks[0] != "tann-manifest" || toks[1] != "v1")
        throw ValidationError(where + ": expected 'tann-manifest v1' header");
      header_seen = true;
      continue;
    }
    if (toks[0] == "name") {
      if (toks.size() != 2) throw ValidationError(where + ": expected 'name <dataset>'");
      ds.name = toks[1];
      name_seen = true;
    } else if (toks[0] == "shape") {
      if (toks.size() != 4) throw ValidationError(where + ": expected 'shape <d> <n> <classes>'");
      ds.d = parse_int_field(toks[1], "d", where);
      ds.n = parse_int_field(toks[2], "n", where);
      ds.classes = parse_int_field(toks[3], "classes", where);
      shape_seen = true;
    } else if (toks[0] == "planted") {
      for (size_t i = 1; i < toks.size(); ++i)
        ds.planted_regions.push_back(parse_int_field(toks[i], "region index", where));
    } else if (toks[0] == "subject") {
      if (toks.size() != 3) throw ValidationError(where + ": expected 'subject <id> <file>'");
      ds.subjects.push_back(SubjectInfo{toks[1], toks[2], {}});
    } else if (toks[0] == "trial") {
      if (ds.subjects.empty())
        throw ValidationError(where + ": 'trial' before any 'subject' line");
      if (toks.size() != 4)
        throw ValidationError(where + ": expected 'trial <id> <label> <count>'");
      TrialInfo tr;
      tr.id = toks[1];
      tr.label = parse_int_field(toks[2], "label", where);
      tr.count = parse_int_field(toks[3], "sample count", where);
      ds.subjects.back().trials.push_back(tr);
    } else {
      throw ValidationError(where + ": unknown directive '" + toks[0] + "'");
    }
  }
  if (!header_seen) throw ValidationError(manifest_path + ": empty manifest");
  if (!name_seen) throw ValidationError(manifest_path + ": missing 'name' line");
  if (!shape_seen) throw ValidationError(manifest_path + ": missing 'shape' line");

  const auto dir = std::filesystem::path(manifest_path).parent_path();
  for (auto& subj : ds.subjects)
    read_feature_file(ds, subj, (dir / subj.file).string());
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& dir, const std::string& manifest_name) {
  ds.validate();
  ensure_dir(dir);
  std::string man;
  man += "tann-manifest v1\n";
  man += "name " + ds.name + "\n";
  man += "shape " + std::to_string(ds.d) + " " + std::to_string(ds.n) + " " +
         std::to_string(ds.classes) + "\n";
  if (!ds.planted_regions.empty()) {
    man += "planted";
    for (int r : ds.planted_regions) man += " " + std::to_string(r);
    man += "\n";
  }
  for (const auto& subj : ds.subjects) {
    man += "subject " + subj.id + " " + subj.file + "\n";
    for (const auto& tr : subj.trials)
      man += "trial " + tr.id + " " + std::to_string(tr.label) + " " + std::to_string(tr.count) +
             "\n";
    const auto path = std::filesystem::path(dir) / subj.file;
    ensure_parent_dir(path.string());
    write_file_atomic(path.string(), feature_blob(ds, subj));
  }
  write_file_atomic((std::filesystem::path(dir) / manifest_name).string(), man);
}

// ---- splits --------------------------------------------------------------

const std::vector<DependentRule>& dependent_rules() {
  static const std::vector<DependentRule> rules = {
      {"seed", 9},
      {"seed-iv", 16},
      {"mped", 21},
  };
  return rules;
}

const DependentRule* find_rule(const std::string& name) {
  for (const auto& r : dependent_rules())
    if (r.name == name) return &r;
  return nullptr;
}

std::vector<Fold> split_subject_dependent(const Dataset& ds, const DependentRule& rule) {
  if (rule.train_trials <= 0)
    throw ValidationError("split rule '" + rule.name + "': train_trials must be positive");
  std::vector<Fold> folds;
  for (const auto& subj : ds.subjects) {
    if ((int)subj.trials.size() <= rule.train_trials)
      throw ValidationError("subject '" + subj.id + "' has " +
                            std::to_string(subj.trials.size()) + " trials; rule '" + rule.name +
                            "' needs more than " + std::to_string(rule.train_trials));
    Fold f;
    f.name = subj.id;
    f.target_subject = subj.id;
    for (int t = 0; t < (int)subj.trials.size(); ++t) {
      const auto& tr = subj.trials[t];
      auto& dst = (t < rule.train_trials) ? f.source_samples : f.target_samples;
      for (int k = 0; k < tr.count; ++k) dst.push_back(tr.first_sample + k);
    }
    folds.push_back(std::move(f));
  }
  return folds;
}

std::vector<Fold> split_loso(const Dataset& ds) {
  if (ds.subjects.size() < 2)
    throw ValidationError("leave-one-subject-out needs at least 2 subjects, dataset '" + ds.name +
                          "' has " + std::to_string(ds.subjects.size()));
  std::vector<Fold> folds;
  for (const auto& held : ds.subjects) {
    Fold f;
    f.name = held.id;
    f.target_subject = held.id;
    for (const auto& subj : ds.subjects) {
      auto& dst = (subj.id == held.id) ? f.target_samples : f.source_samples;
      for (const auto& tr : subj.trials)
        for (int k = 0; k < tr.count; ++k) dst.push_back(tr.first_sample + k);
    }
    folds.push_back(std::move(f));
  }
  return folds;
}

std::vector<BatchItem> train_items(const Dataset& ds, const Fold& fold, bool source_side) {
  const auto& idx = source_side ? fold.source_samples : fold.target_samples;
  std::vector<BatchItem> items;
  items.reserve(idx.size());
  for (int i : idx) {
    const FeatureSample& s = ds.samples.at(i);
    BatchItem it;
    it.x = &s.x;
    it.label = source_side ? s.label_ : -1;
    it.is_source = source_side;
    it.sample_id = s.sample_id();
    items.push_back(std::move(it));
  }
  return items;
}

}  // namespace tann
