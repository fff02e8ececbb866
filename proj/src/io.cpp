#include "subtask_forge/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include <openssl/evp.h>

namespace subtask_forge::io {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw InvalidInput("field '" + path + "': " + what);
}

void check_keys(const Json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) field_error(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) field_error(path.empty() ? key : path + "." + key, "unknown field");
  }
}

std::string join(const std::string& path, const char* key) {
  return path.empty() ? std::string(key) : path + "." + key;
}

int get_int(const Json& obj, const char* key, const std::string& path, int fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) field_error(join(path, key), "expected an integer");
  return v.get<int>();
}

double get_double(const Json& obj, const char* key, const std::string& path, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) field_error(join(path, key), "expected a number");
  return v.get<double>();
}

Cell get_cell(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    field_error(path, "expected [row, col]");
  }
  return {v[0].get<int>(), v[1].get<int>()};
}

Json triplets(const SparseMatrix& m) {
  Json out = Json::array();
  for (Index c = 0; c < m.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
      out.push_back(Json::array({it.row(), it.col(), it.value()}));
    }
  }
  return Json{{"triplets", std::move(out)}};
}

SparseMatrix sparse_from(const Json& j, const char* name, Index rows, Index cols) {
  if (!j.contains(name) || !j.at(name).is_object() || !j.at(name).contains("triplets")) {
    field_error(name, "expected {\"triplets\": [...]}");
  }
  const auto& list = j.at(name).at("triplets");
  if (!list.is_array()) field_error(std::string(name) + ".triplets", "expected an array");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto& t = list[i];
    const std::string where = std::string(name) + ".triplets[" + std::to_string(i) + "]";
    if (!t.is_array() || t.size() != 3 || !t[0].is_number_integer() || !t[1].is_number_integer() ||
        !t[2].is_number()) {
      field_error(where, "expected [row, col, value]");
    }
    const auto r = t[0].get<Index>();
    const auto c = t[1].get<Index>();
    if (r < 0 || r >= rows || c < 0 || c >= cols) field_error(where, "index out of range");
    trip.emplace_back(r, c, t[2].get<double>());
  }
  SparseMatrix m(rows, cols);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

double parse_double(std::string_view s, std::size_t line) {
  s = trim(s);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidInput("matrix CSV line " + std::to_string(line) + ": cannot parse '" +
                       std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json lmdp_to_json(const Lmdp& lmdp, const DomainSpec* domain) {
  Json j;
  j["n_interior"] = lmdp.space.n_interior;
  j["n_boundary"] = lmdp.space.n_boundary;
  if (!lmdp.space.labels.empty()) j["labels"] = lmdp.space.labels;
  j["lambda"] = lmdp.lambda;
  j["r_interior"] = std::vector<double>(lmdp.r_interior.data(),
                                        lmdp.r_interior.data() + lmdp.r_interior.size());
  j["P_ii"] = triplets(lmdp.dynamics.interior);
  j["P_bi"] = triplets(lmdp.dynamics.boundary);
  if (domain) j["domain"] = domain_spec_to_json(*domain);
  return j;
}

Lmdp lmdp_from_json(const Json& j) {
  check_keys(j, "", {"n_interior", "n_boundary", "labels", "lambda", "r_interior", "P_ii", "P_bi",
                     "domain"});
  auto count = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_number_unsigned()) {
      field_error(key, "expected a nonnegative integer");
    }
    return j.at(key).get<std::size_t>();
  };
  Lmdp l;
  l.space.n_interior = count("n_interior");
  l.space.n_boundary = count("n_boundary");
  if (j.contains("labels")) {
    const auto& labels = j.at("labels");
    if (!labels.is_array()) field_error("labels", "expected an array of strings");
    for (const auto& s : labels) {
      if (!s.is_string()) field_error("labels", "expected an array of strings");
      l.space.labels.push_back(s.get<std::string>());
    }
  }
  if (!j.contains("lambda") || !j.at("lambda").is_number()) field_error("lambda", "expected a number");
  l.lambda = j.at("lambda").get<double>();
  if (!j.contains("r_interior") || !j.at("r_interior").is_array()) {
    field_error("r_interior", "expected an array of numbers");
  }
  const auto& r = j.at("r_interior");
  l.r_interior.resize(static_cast<Index>(r.size()));
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!r[i].is_number()) field_error("r_interior", "expected an array of numbers");
    l.r_interior[static_cast<Index>(i)] = r[i].get<double>();
  }
  const auto ni = static_cast<Index>(l.space.n_interior);
  const auto nb = static_cast<Index>(l.space.n_boundary);
  l.dynamics.interior = sparse_from(j, "P_ii", ni, ni);
  l.dynamics.boundary = sparse_from(j, "P_bi", nb, ni);
  return l;
}

std::optional<DomainSpec> embedded_domain(const Json& j) {
  if (!j.is_object() || !j.contains("domain")) return std::nullopt;
  return domain_spec_from_json(j.at("domain"));
}

DomainSpec domain_spec_from_json(const Json& j) {
  check_keys(j, "", {"type", "params", "r_step", "lambda", "twin_weight"});
  if (!j.contains("type") || !j.at("type").is_string()) {
    field_error("type", "expected \"rooms\", \"taxi\" or \"ring\"");
  }
  const auto type = j.at("type").get<std::string>();
  const Json params = j.contains("params") ? j.at("params") : Json::object();
  DomainSpec spec;
  spec.walk.r_step = get_double(j, "r_step", "", spec.walk.r_step);
  spec.walk.lambda = get_double(j, "lambda", "", spec.walk.lambda);
  spec.walk.twin_weight = get_double(j, "twin_weight", "", spec.walk.twin_weight);
  if (type == "rooms") {
    check_keys(params, "params", {"room_rows", "room_cols", "room_size", "layout"});
    RoomsSpec p;
    p.room_rows = get_int(params, "room_rows", "params", p.room_rows);
    p.room_cols = get_int(params, "room_cols", "params", p.room_cols);
    p.room_size = get_int(params, "room_size", "params", p.room_size);
    if (params.contains("layout")) {
      const auto& v = params.at("layout");
      if (!v.is_string() || (v != "grid" && v != "snake")) {
        field_error("params.layout", "expected \"grid\" or \"snake\"");
      }
      p.layout = v == "grid" ? RoomsLayout::grid : RoomsLayout::snake;
    }
    spec.params = p;
  } else if (type == "taxi") {
    check_keys(params, "params", {"grid_side", "depots", "walls"});
    TaxiSpec p;
    p.grid_side = get_int(params, "grid_side", "params", p.grid_side);
    if (params.contains("depots")) {
      const auto& d = params.at("depots");
      if (!d.is_array() || d.size() != 4) field_error("params.depots", "expected 4 [row, col] cells");
      for (std::size_t i = 0; i < 4; ++i) {
        p.depots[i] = get_cell(d[i], "params.depots[" + std::to_string(i) + "]");
      }
    }
    if (params.contains("walls")) {
      const auto& w = params.at("walls");
      if (!w.is_array()) field_error("params.walls", "expected an array of [[r, c], [r, c]] pairs");
      p.walls.clear();
      for (std::size_t i = 0; i < w.size(); ++i) {
        const std::string where = "params.walls[" + std::to_string(i) + "]";
        if (!w[i].is_array() || w[i].size() != 2) field_error(where, "expected [[r, c], [r, c]]");
        p.walls.emplace_back(get_cell(w[i][0], where), get_cell(w[i][1], where));
      }
    }
    spec.params = p;
  } else if (type == "ring") {
    check_keys(params, "params", {"n"});
    RingSpec p;
    p.n = get_int(params, "n", "params", p.n);
    spec.params = p;
  } else {
    field_error("type", "expected \"rooms\", \"taxi\" or \"ring\", got \"" + type + "\"");
  }
  return spec;
}

Json domain_spec_to_json(const DomainSpec& spec) {
  Json j;
  j["type"] = to_string(spec.kind());
  Json params;
  if (const auto* r = std::get_if<RoomsSpec>(&spec.params)) {
    params = {{"room_rows", r->room_rows},
              {"room_cols", r->room_cols},
              {"room_size", r->room_size},
              {"layout", to_string(r->layout)}};
  } else if (const auto* t = std::get_if<TaxiSpec>(&spec.params)) {
    params["grid_side"] = t->grid_side;
    params["depots"] = Json::array();
    for (const auto& c : t->depots) params["depots"].push_back({c.row, c.col});
    params["walls"] = Json::array();
    for (const auto& [a, b] : t->walls) {
      params["walls"].push_back(Json::array({Json::array({a.row, a.col}), Json::array({b.row, b.col})}));
    }
  } else {
    params["n"] = std::get<RingSpec>(spec.params).n;
  }
  j["params"] = params;
  j["r_step"] = spec.walk.r_step;
  j["lambda"] = spec.walk.lambda;
  j["twin_weight"] = spec.walk.twin_weight;
  return j;
}

std::string matrix_to_csv(const Matrix& m) {
  std::string out = std::to_string(m.rows()) + "," + std::to_string(m.cols()) + "\n";
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Matrix matrix_from_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  if (lines.empty()) throw InvalidInput("matrix CSV is empty");
  const auto header = trim(lines[0]);
  const auto comma = header.find(',');
  if (comma == std::string_view::npos) throw InvalidInput("matrix CSV header must be 'rows,cols'");
  long rows = 0;
  long cols = 0;
  const auto r1 = std::from_chars(header.data(), header.data() + comma, rows);
  const auto r2 = std::from_chars(header.data() + comma + 1, header.data() + header.size(), cols);
  if (r1.ec != std::errc() || r2.ec != std::errc() || rows < 0 || cols < 0 ||
      r2.ptr != header.data() + header.size()) {
    throw InvalidInput("matrix CSV header must be 'rows,cols'");
  }
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    const auto at = static_cast<std::size_t>(i + 1);
    if (at >= lines.size()) throw InvalidInput("matrix CSV has fewer rows than its header states");
    auto line = trim(lines[at]);
    for (long j = 0; j < cols; ++j) {
      const auto c = line.find(',');
      if ((c == std::string_view::npos) != (j == cols - 1)) {
        throw InvalidInput("matrix CSV line " + std::to_string(at + 1) + " has the wrong column count");
      }
      m(i, j) = parse_double(line.substr(0, c), at + 1);
      if (c != std::string_view::npos) line.remove_prefix(c + 1);
    }
  }
  for (std::size_t extra = static_cast<std::size_t>(rows) + 1; extra < lines.size(); ++extra) {
    if (!trim(lines[extra]).empty()) throw InvalidInput("matrix CSV has more rows than its header states");
  }
  return m;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const fs::path& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput(path.string() + ": malformed JSON: " + e.what());
  }
}

void write_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw InvalidInput("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

Json factorization_meta(const Factorization& f) {
  Json j;
  j["beta"] = f.beta;
  j["k"] = f.k;
  j["seed"] = f.seed;
  j["restarts"] = f.restarts;
  j["best_restart"] = f.best_restart;
  j["iterations"] = f.iterations;
  j["iteration_limit_hit"] = f.iteration_limit_hit;
  j["divergence"] = f.divergence;
  j["normalized_divergence"] = f.normalized_divergence;
  j["restart_divergences"] = f.restart_divergences;
  j["d_columns"] = "l1_normalized";
  j["z_columns_normalized"] = false;
  return j;
}

void write_factorization(const fs::path& dir, const Factorization& f) {
  fs::create_directories(dir);
  write_atomic(dir / "D.csv", matrix_to_csv(f.D));
  write_atomic(dir / "W.csv", matrix_to_csv(f.W));
  write_atomic(dir / "meta.json", factorization_meta(f).dump(2) + "\n");
  std::string trace = "iteration,divergence\n";
  for (std::size_t i = 0; i < f.divergence_trace.size(); ++i) {
    trace += std::to_string(i) + "," + format_double(f.divergence_trace[i]) + "\n";
  }
  write_atomic(dir / "trace.csv", trace);
}

Factorization read_factorization(const fs::path& dir) {
  Factorization f;
  f.D = matrix_from_csv(read_file(dir / "D.csv"));
  f.W = matrix_from_csv(read_file(dir / "W.csv"));
  if (f.D.cols() != f.W.rows()) throw InvalidInput(dir.string() + ": D and W ranks differ");
  f.k = static_cast<std::size_t>(f.D.cols());
  const fs::path meta = dir / "meta.json";
  if (fs::exists(meta)) {
    const Json j = read_json(meta);
    f.beta = j.value("beta", 1.0);
    f.seed = j.value("seed", std::uint64_t{0});
    f.restarts = j.value("restarts", std::size_t{0});
    f.iterations = j.value("iterations", std::size_t{0});
    f.divergence = j.value("divergence", 0.0);
    f.normalized_divergence = j.value("normalized_divergence", 0.0);
  }
  return f;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

}  // namespace subtask_forge::io
