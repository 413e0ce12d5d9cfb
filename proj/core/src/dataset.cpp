#include "soundfield/dataset.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fs = std::filesystem;

namespace soundfield {

namespace {

std::string rir_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rir_%05d.csv", index);
  return buf;
}

[[noreturn]] void fail(const fs::path& path, const std::string& what) {
  throw std::invalid_argument(path.string() + ": " + what);
}

struct Table {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> rows;
};

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  if (lines.empty()) fail(path, "file is empty");
  return lines;
}

void parse_stamp(const fs::path& path, const std::string& line, std::uint64_t& config_hash,
                 std::uint64_t& seed) {
  if (std::sscanf(line.c_str(), "# config_hash=%16" SCNx64 " seed=%" SCNu64, &config_hash,
                  &seed) != 2)
    fail(path, "first line must be '# config_hash=<hex16> seed=<dec>'");
}

double parse_cell(const fs::path& path, int row, const std::string& cell) {
  const char* text = cell.c_str();
  char* end = nullptr;
  const double value = std::strtod(text, &end);
  if (end == text || *end != '\0')
    fail(path, "row " + std::to_string(row) + ": '" + cell + "' is not a number");
  return value;
}

Table read_table(const fs::path& path, const std::string& header) {
  const std::vector<std::string> lines = read_lines(path);
  Table table;
  parse_stamp(path, lines[0], table.config_hash, table.seed);
  if (lines.size() < 2 || lines[1] != header)
    fail(path, "expected header '" + header + "'");
  const size_t columns = std::count(header.begin(), header.end(), ',') + 1;
  for (size_t i = 2; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    std::vector<double> row;
    std::stringstream cells(lines[i]);
    std::string cell;
    while (std::getline(cells, cell, ','))
      row.push_back(parse_cell(path, static_cast<int>(i - 1), cell));
    if (row.size() != columns)
      fail(path, "row " + std::to_string(i - 1) + ": expected " + std::to_string(columns) +
                     " columns, found " + std::to_string(row.size()));
    table.rows.push_back(std::move(row));
  }
  return table;
}

void require_index_column(const fs::path& path, const Table& table, int first) {
  for (size_t i = 0; i < table.rows.size(); ++i)
    if (table.rows[i][0] != first + static_cast<int>(i))
      fail(path, "row " + std::to_string(i + 1) + ": index " +
                     std::to_string(table.rows[i][0]) + " breaks the run starting at " +
                     std::to_string(first));
}

void require_same_stamp(const fs::path& path, const Table& table, const Dataset& dataset) {
  if (table.config_hash != dataset.config_hash || table.seed != dataset.seed)
    fail(path, "config_hash/seed stamp differs from meta (files from mixed runs?)");
}

std::string points_csv(const Dataset& d, const Eigen::Matrix3Xd& points) {
  std::string out = file_stamp(d.config_hash, d.seed) + "\ni,x,y,z\n";
  for (int i = 0; i < points.cols(); ++i)
    out += std::to_string(i) + ',' + format_double(points(0, i)) + ',' +
           format_double(points(1, i)) + ',' + format_double(points(2, i)) + '\n';
  return out;
}

std::string rir_csv(const Dataset& d, const Eigen::VectorXd& rir) {
  std::string out = file_stamp(d.config_hash, d.seed) + "\nn,h\n";
  for (int n = 0; n < rir.size(); ++n)
    out += std::to_string(n) + ',' + format_double(rir[n]) + '\n';
  return out;
}

void save_point_set(const fs::path& dir, const Dataset& d, const Eigen::Matrix3Xd& points,
                    const Eigen::MatrixXd& rirs) {
  fs::create_directories(dir);
  write_file_atomic(dir / "points.csv", points_csv(d, points));
  for (int i = 0; i < points.cols(); ++i)
    write_file_atomic(dir / rir_name(i), rir_csv(d, rirs.col(i)));
}

void load_point_set(const fs::path& dir, const Dataset& dataset, int window,
                    Eigen::Matrix3Xd& points, Eigen::MatrixXd& rirs) {
  if (!fs::exists(dir / "points.csv")) return;
  const Table index = read_table(dir / "points.csv", "i,x,y,z");
  require_same_stamp(dir / "points.csv", index, dataset);
  require_index_column(dir / "points.csv", index, 0);
  const int count = static_cast<int>(index.rows.size());
  points.resize(3, count);
  rirs.resize(window, count);
  for (int i = 0; i < count; ++i) {
    points.col(i) = Eigen::Vector3d(index.rows[i][1], index.rows[i][2], index.rows[i][3]);
    const fs::path file = dir / rir_name(i);
    const Table rir = read_table(file, "n,h");
    require_same_stamp(file, rir, dataset);
    require_index_column(file, rir, 0);
    if (static_cast<int>(rir.rows.size()) != window)
      fail(file, "has " + std::to_string(rir.rows.size()) + " samples but the window is " +
                     std::to_string(window));
    for (int n = 0; n < window; ++n) rirs(n, i) = rir.rows[n][1];
  }
}

std::map<std::string, std::string> read_meta(const fs::path& path, std::uint64_t& config_hash,
                                             std::uint64_t& seed) {
  const std::vector<std::string> lines = read_lines(path);
  parse_stamp(path, lines[0], config_hash, seed);
  std::map<std::string, std::string> entries;
  for (size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const size_t space = lines[i].find(' ');
    if (space == std::string::npos || space == 0)
      fail(path, "line " + std::to_string(i + 1) + ": expected 'key value'");
    entries[lines[i].substr(0, space)] = lines[i].substr(space + 1);
  }
  return entries;
}

const std::string& meta_value(const fs::path& path,
                              const std::map<std::string, std::string>& entries,
                              const std::string& key) {
  const auto it = entries.find(key);
  if (it == entries.end()) fail(path, "missing key '" + key + "'");
  return it->second;
}

}  // namespace

std::string file_stamp(std::uint64_t config_hash, std::uint64_t seed) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "# config_hash=%016" PRIx64 " seed=%" PRIu64, config_hash,
                seed);
  return buf;
}

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(tmp.string() + ": cannot open for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error(tmp.string() + ": write failed");
  }
  fs::rename(tmp, path);
}

void Dataset::validate() const {
  measurement.validate(true);
  if (eval_points.cols() != truth.cols())
    throw std::invalid_argument("dataset: truth responses do not match the evaluation grid");
  if (truth.cols() > 0 && truth.rows() != measurement.window)
    throw std::invalid_argument("dataset: truth responses do not match the window length");
  if (stationary_points.cols() != stationary_rirs.cols())
    throw std::invalid_argument("dataset: stationary responses do not match their positions");
  if (stationary_rirs.cols() > 0 && stationary_rirs.rows() != measurement.window)
    throw std::invalid_argument("dataset: stationary responses do not match the window length");
  if (noise_sigma < 0.0) throw std::invalid_argument("dataset: noise_sigma must be >= 0");
}

void save_dataset(const fs::path& dir, const Dataset& dataset) {
  dataset.validate();
  fs::create_directories(dir);
  const std::string stamp = file_stamp(dataset.config_hash, dataset.seed);
  const MovingMeasurement& m = dataset.measurement;

  std::string meta = stamp + "\nformat soundfield-dataset-1\n";
  meta += "sample_rate " + format_double(m.sample_rate) + '\n';
  meta += "window " + std::to_string(m.window) + '\n';
  meta += "samples " + std::to_string(m.count()) + '\n';
  meta += "units m,s,Pa\n";
  meta += "seed " + std::to_string(dataset.seed) + '\n';
  char hash[24];
  std::snprintf(hash, sizeof(hash), "%016" PRIx64, dataset.config_hash);
  meta += std::string("config_hash ") + hash + '\n';
  meta += "noise_sigma " + format_double(dataset.noise_sigma) + '\n';
  meta += std::string("periodic_source ") + (dataset.periodic_source ? "1" : "0") + '\n';
  meta += "eval_points " + std::to_string(dataset.eval_points.cols()) + '\n';
  meta += "stationary_mics " + std::to_string(dataset.stationary_points.cols()) + '\n';
  write_file_atomic(dir / "meta", meta);

  std::string trajectory = stamp + "\nn,x,y,z\n";
  for (int n = 0; n < m.count(); ++n)
    trajectory += std::to_string(n) + ',' + format_double(m.positions(0, n)) + ',' +
                  format_double(m.positions(1, n)) + ',' + format_double(m.positions(2, n)) +
                  '\n';
  write_file_atomic(dir / "trajectory.csv", trajectory);

  std::string recording = stamp + "\nn,p\n";
  for (int n = 0; n < m.count(); ++n)
    recording += std::to_string(n) + ',' + format_double(m.pressure[n]) + '\n';
  write_file_atomic(dir / "recording.csv", recording);

  std::string source = stamp + "\nn,phi\n";
  for (int i = 0; i < m.source.size(); ++i)
    source += std::to_string(i - (m.window - 1)) + ',' + format_double(m.source[i]) + '\n';
  write_file_atomic(dir / "source.csv", source);

  if (dataset.eval_points.cols() > 0)
    save_point_set(dir / "truth", dataset, dataset.eval_points, dataset.truth);
  if (dataset.stationary_points.cols() > 0)
    save_point_set(dir / "stationary", dataset, dataset.stationary_points,
                   dataset.stationary_rirs);
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw std::invalid_argument(dir.string() + ": not a dataset directory");

  Dataset dataset;
  const fs::path meta_path = dir / "meta";
  const auto meta = read_meta(meta_path, dataset.config_hash, dataset.seed);
  if (meta_value(meta_path, meta, "format") != "soundfield-dataset-1")
    fail(meta_path, "unsupported format '" + meta_value(meta_path, meta, "format") + "'");
  MovingMeasurement& m = dataset.measurement;
  m.sample_rate = std::stod(meta_value(meta_path, meta, "sample_rate"));
  m.window = std::stoi(meta_value(meta_path, meta, "window"));
  const int samples = std::stoi(meta_value(meta_path, meta, "samples"));
  dataset.noise_sigma = std::stod(meta_value(meta_path, meta, "noise_sigma"));
  dataset.periodic_source = meta_value(meta_path, meta, "periodic_source") == "1";
  if (m.window < 2) fail(meta_path, "window must be >= 2");
  if (samples < 1) fail(meta_path, "samples must be >= 1");

  const Table trajectory = read_table(dir / "trajectory.csv", "n,x,y,z");
  require_same_stamp(dir / "trajectory.csv", trajectory, dataset);
  require_index_column(dir / "trajectory.csv", trajectory, 0);
  if (static_cast<int>(trajectory.rows.size()) != samples)
    fail(dir / "trajectory.csv", "has " + std::to_string(trajectory.rows.size()) +
                                     " rows but meta declares " + std::to_string(samples) +
                                     " samples");
  m.positions.resize(3, samples);
  for (int n = 0; n < samples; ++n)
    m.positions.col(n) = Eigen::Vector3d(trajectory.rows[n][1], trajectory.rows[n][2],
                                         trajectory.rows[n][3]);

  const Table recording = read_table(dir / "recording.csv", "n,p");
  require_same_stamp(dir / "recording.csv", recording, dataset);
  require_index_column(dir / "recording.csv", recording, 0);
  if (recording.rows.size() != trajectory.rows.size())
    fail(dir / "recording.csv",
         "has " + std::to_string(recording.rows.size()) + " samples but trajectory.csv has " +
             std::to_string(trajectory.rows.size()));
  m.pressure.resize(samples);
  for (int n = 0; n < samples; ++n) m.pressure[n] = recording.rows[n][1];

  const fs::path source_path = dir / "source.csv";
  const Table source = read_table(source_path, "n,phi");
  require_same_stamp(source_path, source, dataset);
  if (source.rows.empty()) fail(source_path, "no samples");
  const int first = static_cast<int>(source.rows[0][0]);
  require_index_column(source_path, source, first);
  const int last = first + static_cast<int>(source.rows.size()) - 1;
  if (last != samples - 1)
    fail(source_path, "last sample has n=" + std::to_string(last) + ", expected n=" +
                          std::to_string(samples - 1));
  m.source.resize(samples + m.window - 1);
  if (first == -(m.window - 1)) {
    for (size_t i = 0; i < source.rows.size(); ++i) m.source[i] = source.rows[i][1];
  } else if (first == 0) {
    if (!dataset.periodic_source)
      fail(source_path, "missing the " + std::to_string(m.window - 1) +
                            " pre-roll rows (n<0); only periodic sources may omit them");
    if (samples < m.window)
      fail(source_path, "cannot rebuild the pre-roll from fewer samples than one period");
    for (int n = 0; n < samples; ++n) m.source[n + m.window - 1] = source.rows[n][1];
    for (int j = 1; j < m.window; ++j)
      m.source[m.window - 1 - j] = m.source[2 * m.window - 1 - j];
  } else {
    fail(source_path, "first sample has n=" + std::to_string(first) + ", expected n=" +
                          std::to_string(-(m.window - 1)) + " or n=0");
  }

  load_point_set(dir / "truth", dataset, m.window, dataset.eval_points, dataset.truth);
  load_point_set(dir / "stationary", dataset, m.window, dataset.stationary_points,
                 dataset.stationary_rirs);
  const int declared_eval = std::stoi(meta_value(meta_path, meta, "eval_points"));
  if (declared_eval != dataset.eval_points.cols())
    fail(meta_path, "declares " + std::to_string(declared_eval) + " eval_points but truth/ has " +
                        std::to_string(dataset.eval_points.cols()));
  const int declared_mics = std::stoi(meta_value(meta_path, meta, "stationary_mics"));
  if (declared_mics != dataset.stationary_points.cols())
    fail(meta_path, "declares " + std::to_string(declared_mics) +
                        " stationary_mics but stationary/ has " +
                        std::to_string(dataset.stationary_points.cols()));

  dataset.validate();
  return dataset;
}

}  // namespace soundfield
