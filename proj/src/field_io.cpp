#include "strata/field_io.hpp"

#include "strata/frequency.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace strata {

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw SpecError(where + ": expected a JSON object", "");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw SpecError(where + ": unknown key '" + key + "'", key);
}

template <typename T>
T get(const nlohmann::json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw SpecError(where + ": missing key '" + key + "'", key);
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SpecError(where + ": key '" + key + "' has the wrong type", key);
  }
}

HarmonicPolynomial polynomial_from(const nlohmann::json& j, int n, const std::string& where) {
  const int d = get<int>(j, "degree", where);
  if (d < 0 || d > 32) throw SpecError(where + ": degree out of range", "degree");
  const bool has_coeffs = j.contains("coeffs"), has_mono = j.contains("monomials");
  if (has_coeffs == has_mono) throw SpecError(where + ": give exactly one of 'coeffs' or 'monomials'", "degree");
  try {
    if (has_coeffs) return HarmonicPolynomial::from_basis(n, d, get<std::vector<double>>(j, "coeffs", where));
    HomogeneousPolynomial p(n, d);
    for (const auto& term : j.at("monomials")) {
      check_keys(term, {"exp", "c"}, where + ".monomials");
      const auto e = get<Exponent>(term, "exp", where + ".monomials");
      const long idx = static_cast<int>(e.size()) == n ? p.table().index(e) : -1;
      if (idx < 0) throw SpecError(where + ": monomial exponent does not have degree " + std::to_string(d), "monomials");
      p.coeffs()[idx] += get<double>(term, "c", where + ".monomials");
    }
    return HarmonicPolynomial::from_monomials(p);
  } catch (const SpecError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw SpecError(where + ": " + e.what(), has_coeffs ? "coeffs" : "monomials");
  }
}

Vector vector_from(const nlohmann::json& j, const std::string& key, int n, const std::string& where) {
  const auto v = get<std::vector<double>>(j, key, where);
  if (static_cast<int>(v.size()) != n) throw SpecError(where + ": '" + key + "' must have " + std::to_string(n) + " entries", key);
  return Eigen::Map<const Vector>(v.data(), n);
}

FieldPtr parse(const nlohmann::json& j, const std::filesystem::path& base_dir, const std::string& where) {
  if (!j.is_object()) throw SpecError(where + ": expected a JSON object", "");
  const std::string type = get<std::string>(j, "type", where);
  FieldPtr out;
  auto dim = [&]() {
    const int n = get<int>(j, "n", where);
    if (n < 1 || n > 16) throw SpecError(where + ": n must be between 1 and 16", "n");
    return n;
  };
  try {
    if (type == "polynomial") {
      check_keys(j, {"schema", "type", "n", "degree", "coeffs", "monomials", "lipschitz_hint"}, where);
      const int n = dim();
      out = make_polynomial(polynomial_from(j, n, where));
    } else if (type == "hinged") {
      check_keys(j, {"schema", "type", "n", "degree", "coeffs", "monomials", "c", "frame", "lipschitz_hint"}, where);
      const int n = dim();
      if (n < 2) throw SpecError(where + ": hinged fields need n >= 2", "n");
      const double c = get<double>(j, "c", where);
      if (!(c > 0.0)) throw SpecError(where + ": hinge constant 'c' must be positive", "c");
      Frame frame = Frame::identity(n);
      if (j.contains("frame")) {
        const auto& f = j.at("frame");
        check_keys(f, {"rotation", "origin"}, where + ".frame");
        if (f.contains("rotation")) {
          const auto rows = get<std::vector<std::vector<double>>>(f, "rotation", where + ".frame");
          if (static_cast<int>(rows.size()) != n) throw SpecError(where + ": rotation must be n x n", "rotation");
          for (int r = 0; r < n; ++r) {
            if (static_cast<int>(rows[r].size()) != n) throw SpecError(where + ": rotation must be n x n", "rotation");
            for (int k = 0; k < n; ++k) frame.rotation(r, k) = rows[r][k];
          }
        }
        if (f.contains("origin")) frame.origin = vector_from(f, "origin", n, where + ".frame");
        try {
          frame.validate(n);
        } catch (const InvalidArgument& e) {
          throw SpecError(where + ": " + e.what(), "rotation");
        }
      }
      out = make_hinged(polynomial_from(j, n, where), c, frame);
    } else if (type == "affine") {
      check_keys(j, {"schema", "type", "n", "base", "a", "b", "c0", "shift", "lipschitz_hint"}, where);
      if (!j.contains("base")) throw SpecError(where + ": missing key 'base'", "base");
      FieldPtr base = parse(j.at("base"), base_dir, where + ".base");
      const int n = base->dim();
      if (j.contains("n") && get<int>(j, "n", where) != n) throw SpecError(where + ": n disagrees with the base", "n");
      const double a = j.contains("a") ? get<double>(j, "a", where) : 1.0;
      const double b = j.contains("b") ? get<double>(j, "b", where) : 1.0;
      const double c0 = j.contains("c0") ? get<double>(j, "c0", where) : 0.0;
      if (a == 0.0) throw SpecError(where + ": 'a' must be nonzero", "a");
      if (b == 0.0) throw SpecError(where + ": 'b' must be nonzero", "b");
      const Vector shift = j.contains("shift") ? vector_from(j, "shift", n, where) : Vector::Zero(n);
      out = std::make_shared<AffineField>(base, a, b, shift, c0);
    } else if (type == "sum") {
      check_keys(j, {"schema", "type", "n", "terms", "lipschitz_hint"}, where);
      if (!j.contains("terms") || !j.at("terms").is_array() || j.at("terms").empty())
        throw SpecError(where + ": 'terms' must be a non-empty array", "terms");
      std::vector<FieldPtr> terms;
      for (std::size_t i = 0; i < j.at("terms").size(); ++i)
        terms.push_back(parse(j.at("terms")[i], base_dir, where + ".terms[" + std::to_string(i) + "]"));
      for (const auto& t : terms)
        if (t->dim() != terms.front()->dim()) throw SpecError(where + ": terms must share a dimension", "terms");
      if (j.contains("n") && get<int>(j, "n", where) != terms.front()->dim())
        throw SpecError(where + ": n disagrees with the terms", "n");
      out = make_sum(terms);
    } else if (type == "sampled") {
      check_keys(j, {"schema", "type", "n", "grid_ref", "order", "lipschitz_hint"}, where);
      std::filesystem::path ref = get<std::string>(j, "grid_ref", where);
      if (ref.is_relative()) ref = base_dir / ref;
      const int order = j.contains("order") ? get<int>(j, "order", where) : 1;
      if (order != 1 && order != 3) throw SpecError(where + ": 'order' must be 1 or 3", "order");
      SampledGrid grid = read_sampled_grid(ref.string());
      if (j.contains("n") && get<int>(j, "n", where) != grid.dim())
        throw SpecError(where + ": n disagrees with the grid header", "n");
      out = make_sampled(std::move(grid), order);
    } else if (type == "mollified") {
      check_keys(j, {"schema", "type", "n", "base", "eps", "order", "lipschitz_hint"}, where);
      if (!j.contains("base")) throw SpecError(where + ": missing key 'base'", "base");
      FieldPtr base = parse(j.at("base"), base_dir, where + ".base");
      const double eps = get<double>(j, "eps", where);
      if (!(eps > 0.0)) throw SpecError(where + ": 'eps' must be positive", "eps");
      const int order = j.contains("order") ? get<int>(j, "order", where) : 12;
      if (order < 2) throw SpecError(where + ": 'order' must be at least 2", "order");
      out = mollify(base, eps, order);
    } else {
      throw SpecError(where + ": unknown field type '" + type + "'", "type");
    }
  } catch (const SpecError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw SpecError(where + ": " + e.what(), "type");
  }
  if (j.contains("lipschitz_hint")) {
    const double L = get<double>(j, "lipschitz_hint", where);
    if (!(L > 0.0)) throw SpecError(where + ": 'lipschitz_hint' must be positive", "lipschitz_hint");
    out = with_lipschitz_hint(out, L);
  }
  return out;
}

}  // namespace

FieldPtr field_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (j.is_object() && j.contains("schema") && j.at("schema") != 1) throw SpecError("field: unsupported schema", "schema");
  return parse(j, base_dir, "field");
}

nlohmann::json field_to_json(const ScalarField& v) {
  nlohmann::json j = v.spec();
  j["schema"] = 1;
  return j;
}

int line_of_key(const std::string& text, const std::string& key) {
  if (key.empty()) return 0;
  const auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json parse_text(const std::string& text, const std::string& path) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const std::size_t pre = byte > 0 ? byte - 1 : 0;
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pre), '\n'));
    const std::size_t line_start = text.rfind('\n', pre == 0 ? 0 : pre - 1);
    const std::size_t col = line_start == std::string::npos ? pre + 1 : pre - line_start;
    std::string what = e.what();
    const auto colon = what.find(": ");
    throw InvalidArgument(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": JSON syntax error" +
                          (colon == std::string::npos ? std::string() : what.substr(colon)));
  }
}

}  // namespace

nlohmann::json read_json_file(const std::string& path) { return parse_text(slurp(path), path); }

FieldPtr load_field(const std::string& path) {
  const std::string text = slurp(path);
  const nlohmann::json j = parse_text(text, path);
  try {
    return field_from_json(j, std::filesystem::path(path).parent_path());
  } catch (const SpecError& e) {
    const int line = line_of_key(text, e.key());
    throw InvalidArgument(path + ":" + (line > 0 ? std::to_string(line) + ":" : std::string()) + " " + e.what());
  }
}

FieldMetadata field_metadata(const ScalarField& v, double alpha, std::optional<double> m0_hint) {
  FieldMetadata m;
  const FrequencyRecord rec = frequency_record(v, Vector::Zero(v.dim()), 1.0, 0, false);
  m.Lambda = rec.degenerate ? 0.0 : rec.N;
  m.alpha = alpha;
  m.Gamma = 0.0;
  m.m0_hint = m0_hint;
  return m;
}

}  // namespace strata
