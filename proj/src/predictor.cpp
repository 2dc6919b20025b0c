#include "slotcast/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "slotcast/binary_io.hpp"
#include "slotcast/config.hpp"
#include "slotcast/error.hpp"

namespace slotcast::predictor {

namespace {

constexpr std::string_view kMagic = "SLOTCAST-BUNDLE";
constexpr std::string_view kHeaderEnd = "END\n";

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::vector<sql::ComplexityReport> analyze_all(std::span<const QueryRecord> records,
                                               const sql::OperatorWeights& weights) {
  std::vector<sql::ComplexityReport> reports;
  reports.reserve(records.size());
  for (const auto& r : records) reports.push_back(sql::analyze(r.query_text, weights));
  return reports;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_featurizer(io::ByteWriter& out, const features::FeaturizerState& s) {
  out.str("text");
  out.str_array(s.text.terms);
  out.i64_array(s.text.doc_freq);
  out.f64_array(s.text.idf);
  out.i64(s.text.n_docs);

  out.str("svd");
  out.u64(static_cast<std::uint64_t>(s.svd.components.rows()));
  out.u64(static_cast<std::uint64_t>(s.svd.components.cols()));
  for (Eigen::Index r = 0; r < s.svd.components.rows(); ++r) {
    for (Eigen::Index c = 0; c < s.svd.components.cols(); ++c) out.f64(s.svd.components(r, c));
  }
  out.f64_array(std::span<const double>(s.svd.singular_values.data(), static_cast<std::size_t>(s.svd.singular_values.size())));
  out.f64(s.svd.total_sq_norm);
  out.u64(s.svd.vocab_size);

  out.str("numeric");
  out.f64_array(s.medians);
  out.str_array(s.asset_count_keys);
  out.f64_array(s.means);
  out.f64_array(s.stds);

  out.str("categorical");
  out.str_array(s.asset_types.values);
  out.str_array(s.regions.values);
  out.str_array(s.column_names);
}

void expect_section(io::ByteReader& in, std::string_view name) {
  if (in.str() != name) throw Error(ErrorKind::CorruptBundle, "missing payload section " + std::string(name));
}

features::FeaturizerState read_featurizer(io::ByteReader& in) {
  features::FeaturizerState s;
  expect_section(in, "text");
  s.text.terms = in.str_array();
  s.text.doc_freq = in.i64_array();
  s.text.idf = in.f64_array();
  s.text.n_docs = in.i64();
  if (s.text.doc_freq.size() != s.text.terms.size() || s.text.idf.size() != s.text.terms.size()) {
    throw Error(ErrorKind::CorruptBundle, "vocabulary arrays disagree in length");
  }
  s.text.reindex();

  expect_section(in, "svd");
  const auto rows = in.u64();
  const auto cols = in.u64();
  if (rows != 0 && cols > in.remaining() / 8 / rows) throw Error(ErrorKind::CorruptBundle, "SVD basis too large");
  s.svd.components.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < s.svd.components.rows(); ++r) {
    for (Eigen::Index c = 0; c < s.svd.components.cols(); ++c) s.svd.components(r, c) = in.f64();
  }
  const auto sv = in.f64_array();
  s.svd.singular_values = Eigen::Map<const Eigen::VectorXd>(sv.data(), static_cast<Eigen::Index>(sv.size()));
  s.svd.total_sq_norm = in.f64();
  s.svd.vocab_size = static_cast<std::size_t>(in.u64());
  if (s.svd.vocab_size != s.text.terms.size() || cols != s.svd.vocab_size || sv.size() != rows) {
    throw Error(ErrorKind::CorruptBundle, "SVD basis does not match vocabulary");
  }

  expect_section(in, "numeric");
  const auto medians = in.f64_array();
  if (medians.size() != s.medians.size()) throw Error(ErrorKind::CorruptBundle, "bad imputation table");
  std::copy(medians.begin(), medians.end(), s.medians.begin());
  s.asset_count_keys = in.str_array();
  s.means = in.f64_array();
  s.stds = in.f64_array();
  if (s.means.size() != s.stds.size()) throw Error(ErrorKind::CorruptBundle, "bad scaler statistics");

  expect_section(in, "categorical");
  s.asset_types.values = in.str_array();
  s.regions.values = in.str_array();
  s.column_names = in.str_array();
  s.fitted = true;
  return s;
}

struct Header {
  std::map<std::string, std::string> entries;
  std::size_t size = 0;
};

Header parse_header(std::span<const std::uint8_t> bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (!text.starts_with(std::string(kMagic) + "\n")) throw Error(ErrorKind::CorruptBundle, "not a model bundle");
  const auto end = text.find(std::string("\n") + std::string(kHeaderEnd));
  if (end == std::string_view::npos) throw Error(ErrorKind::CorruptBundle, "bundle header is truncated");
  Header h;
  h.size = end + 1 + kHeaderEnd.size();
  std::istringstream lines(std::string(text.substr(kMagic.size() + 1, end - kMagic.size() - 1)));
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::CorruptBundle, "malformed header line: " + line);
    h.entries[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return h;
}

const std::string& header_value(const Header& h, const std::string& key) {
  const auto it = h.entries.find(key);
  if (it == h.entries.end()) throw Error(ErrorKind::CorruptBundle, "bundle header lacks " + key);
  return it->second;
}

std::int64_t header_int(const Header& h, const std::string& key) {
  try {
    return std::stoll(header_value(h, key));
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::CorruptBundle, "bad integer for " + key);
  }
}

double header_double(const Header& h, const std::string& key) {
  try {
    return std::stod(header_value(h, key));
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::CorruptBundle, "bad number for " + key);
  }
}

std::uint32_t read_le32(std::span<const std::uint8_t> b) {
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

double forward_target(double slot_min) {
  if (!(slot_min >= 0.0)) throw Error(ErrorKind::NegativeTarget, "slot-time must be non-negative");
  return std::log1p(slot_min);
}

double inverse_target(double z) { return std::max(0.0, std::expm1(z)); }

std::string_view to_string(Route r) { return r == Route::Simple ? "simple" : "complex"; }

const gbrt::Forest& ModelBundle::forest_for(Route r) const {
  const auto& dedicated = r == Route::Simple ? simple : complex;
  if (dedicated) return *dedicated;
  if (unified) return *unified;
  throw Error(ErrorKind::CorruptBundle, "bundle has no forest for route " + std::string(to_string(r)));
}

std::string_view ModelBundle::model_name(Route r) const {
  const auto& dedicated = r == Route::Simple ? simple : complex;
  return dedicated ? to_string(r) : "unified";
}

ModelBundle train(std::span<const QueryRecord> records, const TrainConfig& config, std::string timestamp) {
  config.gbrt.validate();
  const auto min_rows = static_cast<std::size_t>(2 * config.gbrt.min_samples_leaf);
  if (records.size() < min_rows) {
    throw Error(ErrorKind::TooFewSamples, "need at least " + std::to_string(min_rows) + " training records, got " +
                                              std::to_string(records.size()));
  }

  std::vector<double> slot_min;
  std::vector<double> targets;
  slot_min.reserve(records.size());
  for (const auto& r : records) {
    const auto s = r.slot_min();
    if (!s) throw Error(ErrorKind::MalformedRecord, "training record without total_slot_ms");
    slot_min.push_back(*s);
    targets.push_back(forward_target(*s));
  }

  ModelBundle bundle;
  bundle.config = config;
  bundle.config.featurizer.svd.seed = config.seed;
  bundle.config.gbrt.seed = config.seed;
  const auto reports = analyze_all(records, config.weights);
  auto [state, matrix] = features::fit_transform_features(records, reports, bundle.config.featurizer);
  bundle.featurizer = std::move(state);

  std::vector<Eigen::Index> simple_rows, complex_rows;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& bucket = config.router.route(reports[i].score) == Route::Simple ? simple_rows : complex_rows;
    bucket.push_back(static_cast<Eigen::Index>(i));
  }

  auto fit_subset = [&](const std::vector<Eigen::Index>& rows) -> std::optional<gbrt::Forest> {
    if (!config.dual_model || rows.size() < static_cast<std::size_t>(config.router.min_subset) ||
        rows.size() < min_rows) {
      return std::nullopt;
    }
    std::vector<double> y;
    y.reserve(rows.size());
    for (const auto r : rows) y.push_back(targets[static_cast<std::size_t>(r)]);
    return gbrt::Forest::fit(select_rows(matrix.values, rows), y, bundle.config.gbrt);
  };
  bundle.simple = fit_subset(simple_rows);
  bundle.complex = fit_subset(complex_rows);
  if (!bundle.simple || !bundle.complex) {
    bundle.unified = gbrt::Forest::fit(matrix.values, targets, bundle.config.gbrt);
  }

  bundle.metadata.records = static_cast<std::int64_t>(records.size());
  bundle.metadata.simple_records = static_cast<std::int64_t>(simple_rows.size());
  bundle.metadata.complex_records = static_cast<std::int64_t>(complex_rows.size());
  bundle.metadata.slot_min_mean =
      std::accumulate(slot_min.begin(), slot_min.end(), 0.0) / static_cast<double>(slot_min.size());
  bundle.metadata.slot_min_median = median_of(slot_min);
  bundle.metadata.timestamp = std::move(timestamp);
  return bundle;
}

std::vector<PredictionResult> predict_batch(const ModelBundle& bundle, std::span<const QueryRecord> records) {
  if (bundle.format_version != ModelBundle::kFormatVersion) {
    throw Error(ErrorKind::BundleVersionMismatch, "bundle format version " + std::to_string(bundle.format_version) +
                                                      " is not supported");
  }
  const auto reports = analyze_all(records, bundle.config.weights);
  const auto matrix = features::transform_features(bundle.featurizer, records, reports);
  std::vector<PredictionResult> out;
  out.reserve(records.size());
  std::vector<double> row(static_cast<std::size_t>(matrix.cols()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      row[static_cast<std::size_t>(c)] = matrix.values(static_cast<Eigen::Index>(i), c);
    }
    PredictionResult p;
    p.complexity_score = reports[i].score;
    p.route = bundle.config.router.route(p.complexity_score);
    p.log_space_value = bundle.forest_for(p.route).predict_row(row);
    p.slot_min = inverse_target(p.log_space_value);
    out.push_back(p);
  }
  return out;
}

PredictionResult predict(const ModelBundle& bundle, const QueryRecord& record) {
  return predict_batch(bundle, std::span<const QueryRecord>(&record, 1)).front();
}

std::vector<std::uint8_t> encode_payload(const ModelBundle& bundle) {
  io::ByteWriter out;
  write_featurizer(out, bundle.featurizer);
  out.str("forests");
  for (const auto* f : {&bundle.simple, &bundle.complex, &bundle.unified}) {
    out.u8(f->has_value() ? 1 : 0);
    if (*f) (*f)->write(out);
  }
  return out.take();
}

std::vector<std::uint8_t> encode_bundle(const ModelBundle& bundle) {
  const auto payload = encode_payload(bundle);
  const auto& meta = bundle.metadata;

  config::KeyValues kv;
  config::write(kv, bundle.config);
  std::ostringstream h;
  h << kMagic << '\n';
  h << "format_version=" << bundle.format_version << '\n';
  h << "created=" << meta.timestamp << '\n';
  for (const auto& [k, v] : kv.entries()) h << "config." << k << '=' << v << '\n';
  h << "train.records=" << meta.records << '\n';
  h << "train.slot_min_mean=" << format_double(meta.slot_min_mean) << '\n';
  h << "train.slot_min_median=" << format_double(meta.slot_min_median) << '\n';
  h << "route.simple.records=" << meta.simple_records << '\n';
  h << "route.complex.records=" << meta.complex_records << '\n';
  h << "route.simple.model=" << bundle.model_name(Route::Simple) << '\n';
  h << "route.complex.model=" << bundle.model_name(Route::Complex) << '\n';
  h << "columns=" << bundle.featurizer.column_names.size() << '\n';
  for (std::size_t i = 0; i < bundle.featurizer.column_names.size(); ++i) {
    h << "column." << i << '=' << bundle.featurizer.column_names[i] << '\n';
  }
  h << "payload_bytes=" << payload.size() << '\n';
  h << "payload_crc32=" << hex32(io::crc32(payload)) << '\n';
  h << kHeaderEnd;

  const std::string header = h.str();
  std::vector<std::uint8_t> file(header.begin(), header.end());
  file.insert(file.end(), payload.begin(), payload.end());
  const std::uint32_t crc = io::crc32(file);
  for (int i = 0; i < 4; ++i) file.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
  return file;
}

ModelBundle decode_bundle(std::span<const std::uint8_t> bytes) {
  const Header header = parse_header(bytes);
  const std::int64_t version = header_int(header, "format_version");
  if (version > ModelBundle::kFormatVersion) {
    throw Error(ErrorKind::BundleVersionMismatch, "bundle format version " + std::to_string(version) +
                                                      " is newer than supported version " +
                                                      std::to_string(ModelBundle::kFormatVersion));
  }
  if (version < 1) throw Error(ErrorKind::CorruptBundle, "invalid format version");

  const auto payload_size = static_cast<std::size_t>(header_int(header, "payload_bytes"));
  if (bytes.size() != header.size + payload_size + 4) {
    throw Error(ErrorKind::CorruptBundle, "bundle size does not match its header");
  }
  const auto body = bytes.first(bytes.size() - 4);
  if (io::crc32(body) != read_le32(bytes.last(4))) {
    throw Error(ErrorKind::CorruptBundle, "bundle checksum mismatch");
  }
  const auto payload = bytes.subspan(header.size, payload_size);
  if (hex32(io::crc32(payload)) != header_value(header, "payload_crc32")) {
    throw Error(ErrorKind::CorruptBundle, "payload checksum mismatch");
  }

  ModelBundle bundle;
  bundle.format_version = version;
  config::KeyValues kv;
  for (const auto& [k, v] : header.entries) {
    if (k.starts_with("config.")) kv.set(k.substr(7), v);
  }
  try {
    config::apply(kv, bundle.config);
  } catch (const Error& e) {
    throw Error(ErrorKind::CorruptBundle, std::string("bundle config: ") + e.what());
  }
  bundle.metadata.timestamp = header_value(header, "created");
  bundle.metadata.records = header_int(header, "train.records");
  bundle.metadata.slot_min_mean = header_double(header, "train.slot_min_mean");
  bundle.metadata.slot_min_median = header_double(header, "train.slot_min_median");
  bundle.metadata.simple_records = header_int(header, "route.simple.records");
  bundle.metadata.complex_records = header_int(header, "route.complex.records");

  io::ByteReader in(payload);
  bundle.featurizer = read_featurizer(in);
  expect_section(in, "forests");
  for (auto* f : {&bundle.simple, &bundle.complex, &bundle.unified}) {
    if (in.u8() != 0) *f = gbrt::Forest::read(in);
  }
  if (!in.done()) throw Error(ErrorKind::CorruptBundle, "trailing bytes in payload");
  if (!bundle.unified && !(bundle.simple && bundle.complex)) {
    throw Error(ErrorKind::CorruptBundle, "bundle does not cover both routes");
  }

  const std::size_t columns = bundle.featurizer.column_names.size();
  if (static_cast<std::size_t>(header_int(header, "columns")) != columns) {
    throw Error(ErrorKind::CorruptBundle, "column layout mismatch");
  }
  for (const auto* f : {&bundle.simple, &bundle.complex, &bundle.unified}) {
    if (*f && (*f)->n_features() != columns) throw Error(ErrorKind::CorruptBundle, "forest width mismatch");
  }
  return bundle;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  const auto bytes = encode_bundle(bundle);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "failed writing " + path.string());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::IoError, "failed reading " + path.string());
  return decode_bundle(bytes);
}

std::string training_summary(const ModelBundle& bundle) {
  const auto& m = bundle.metadata;
  std::ostringstream out;
  out << "records: " << m.records << '\n';
  out << "route simple (score < " << bundle.config.router.threshold << "): " << m.simple_records
      << " records, model " << bundle.model_name(Route::Simple) << '\n';
  out << "route complex (score >= " << bundle.config.router.threshold << "): " << m.complex_records
      << " records, model " << bundle.model_name(Route::Complex) << '\n';
  out << "vocabulary terms: " << bundle.featurizer.text.size() << '\n';
  out << "text components: " << bundle.featurizer.svd.rank() << '\n';
  out << "feature columns: " << bundle.featurizer.column_names.size() << '\n';
  out << "training slot-min mean: " << format_double(m.slot_min_mean) << '\n';
  out << "training slot-min median: " << format_double(m.slot_min_median) << '\n';
  return out.str();
}

}  // namespace slotcast::predictor
