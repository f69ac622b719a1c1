#include "can/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "can/image_io.hpp"
#include "can/image_ops.hpp"
#include "can/parallel.hpp"

namespace can {

namespace {

const char *mode_name(DatasetMode m) {
  switch (m) {
  case DatasetMode::Fixed: return "fixed";
  case DatasetMode::ParamSampled: return "param_sampled";
  case DatasetMode::MultiOp: return "multi_op";
  }
  return "?";
}

DatasetMode parse_mode(const std::string &s) {
  if (s == "fixed") return DatasetMode::Fixed;
  if (s == "param_sampled") return DatasetMode::ParamSampled;
  if (s == "multi_op") return DatasetMode::MultiOp;
  fail(errc::bad_argument, "unknown dataset mode: " + s);
}

std::vector<std::string> split(const std::string &s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

} // namespace

void save_index(const DatasetIndex &ds, const std::string &path) {
  std::ofstream f(path);
  if (!f) fail(errc::file_write_failed, "cannot write " + path);
  f << "# mode=" << mode_name(ds.mode) << "\tops=" << ds.operator_names
    << "\tlambda_bar=" << ds.lambda_bar << "\tseed=" << ds.seed << "\n";
  f.precision(9);
  for (const DatasetEntry &e : ds.entries) {
    f << e.input_path << "\t" << e.target_path;
    for (float a : e.aux) f << "\t" << a;
    f << "\n";
  }
  if (!f) fail(errc::file_write_failed, "short write: " + path);
}

DatasetIndex load_index(const std::string &path) {
  std::ifstream f(path);
  if (!f) fail(errc::file_not_found, "cannot open " + path);
  DatasetIndex ds;
  std::string line;
  if (!std::getline(f, line) || line.empty() || line[0] != '#')
    fail(errc::bad_argument, "missing index header: " + path);
  for (const std::string &tok : split(line.substr(1), '\t')) {
    const size_t eq = tok.find('=');
    if (eq == std::string::npos) continue;
    std::string key = tok.substr(0, eq);
    while (!key.empty() && key.front() == ' ') key.erase(key.begin());
    const std::string val = tok.substr(eq + 1);
    if (key == "mode") ds.mode = parse_mode(val);
    else if (key == "ops") ds.operator_names = val;
    else if (key == "lambda_bar") ds.lambda_bar = std::stod(val);
    else if (key == "seed") ds.seed = std::stoull(val);
  }
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols = split(line, '\t');
    if (cols.size() < 2) fail(errc::bad_argument, "malformed index line: " + line);
    DatasetEntry e;
    e.input_path = cols[0];
    e.target_path = cols[1];
    for (size_t i = 2; i < cols.size(); ++i) e.aux.push_back(std::stof(cols[i]));
    ds.entries.push_back(std::move(e));
  }
  return ds;
}

DatasetIndex build_dataset(const std::vector<std::string> &inputs, const std::string &out_dir,
                           const BuildOptions &opt, BuildReport *report) {
  if (inputs.empty()) fail(errc::empty_dataset, "no input images");
  if (opt.ops.empty()) fail(errc::bad_argument, "no operators given");
  if (opt.mode != DatasetMode::MultiOp && opt.ops.size() != 1)
    fail(errc::bad_argument, "one operator expected outside multi_op mode");

  DatasetIndex ds;
  ds.mode = opt.mode;
  ds.seed = opt.seed;
  for (size_t i = 0; i < opt.ops.size(); ++i) {
    if (i) ds.operator_names += ",";
    ds.operator_names += operator_name(opt.ops[i].id());
  }
  if (opt.mode == DatasetMode::ParamSampled) ds.lambda_bar = operator_lambda(opt.ops[0]);

  // all randomness happens here, in input order
  Rng rng(opt.seed);
  const size_t n = inputs.size();
  std::vector<OperatorSpec> specs;
  std::vector<std::vector<float>> aux(n);
  specs.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    switch (opt.mode) {
    case DatasetMode::Fixed:
      specs.push_back(opt.ops[0]);
      break;
    case DatasetMode::ParamSampled: {
      const double x = rng.uniform(-std::log(10.0), std::log(10.0));
      const double lambda = ds.lambda_bar * std::exp(x);
      specs.push_back(with_lambda(opt.ops[0], lambda));
      aux[i] = {static_cast<float>(std::log10(lambda / ds.lambda_bar))};
      break;
    }
    case DatasetMode::MultiOp: {
      const int k = rng.uniform_int(0, static_cast<int>(opt.ops.size()) - 1);
      specs.push_back(opt.ops[k]);
      aux[i].assign(opt.ops.size(), 0.0f);
      aux[i][k] = 1.0f;
      break;
    }
    }
  }

  std::vector<std::string> targets(n);
  std::vector<std::string> errors(n);
  const int nt = can::threads();
#pragma omp parallel for num_threads(nt) schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "/t%05lld.png", i);
    const std::string target_path = out_dir + name;
    try {
      Image img = load_image(inputs[i]);
      if (img.channels != 3 && specs[i].id() == OperatorId::DarkChannelDehaze)
        fail(errc::bad_argument, "dehazing needs RGB input");
      save_image(apply_operator(specs[i], img), target_path);
      targets[i] = target_path;
    } catch (const Error &e) {
      errors[i] = e.what();
    }
  }

  for (size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      if (report) report->failures.push_back({inputs[i], errors[i]});
      continue;
    }
    ds.entries.push_back({inputs[i], targets[i], aux[i]});
  }
  return ds;
}

LoadedDataset load_pairs(const DatasetIndex &ds) {
  if (ds.entries.empty()) fail(errc::empty_dataset, "dataset has no entries");
  LoadedDataset out;
  const int aux_width = ds.aux_width();
  for (const DatasetEntry &e : ds.entries) {
    TrainPair p;
    p.input = load_image(e.input_path);
    p.target = load_image(e.target_path);
    p.aux = e.aux;
    if (!p.input.same_shape(p.target))
      fail(errc::dimension_mismatch, "pair dimensions differ: " + e.input_path);
    if (static_cast<int>(p.aux.size()) != aux_width)
      fail(errc::bad_argument, "inconsistent aux width: " + e.input_path);
    out.pairs.push_back(std::move(p));
  }
  return out;
}

Sample sample_example(const LoadedDataset &ds, int min_res, int max_res, Rng &rng) {
  if (ds.pairs.empty()) fail(errc::empty_dataset, "cannot sample from an empty dataset");
  const TrainPair &p = ds.pairs[rng.uniform_int(0, static_cast<int>(ds.pairs.size()) - 1)];
  const int h = rng.uniform_int(min_res, max_res);
  const int w = width_for_height(p.input.height, p.input.width, h);
  Sample s;
  s.input = resize_bilinear(p.input, h, w);
  s.target = resize_bilinear(p.target, h, w);
  s.aux = p.aux;
  return s;
}

} // namespace can
