#include "openqs/serialize.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

namespace openqs {

namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
  return j.at(key);
}

void check_keys(const json& j, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) throw ValidationError("unknown key '" + it.key() + "'");
  }
}

double number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) throw ValidationError(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

json to_json(const Mat& a) {
  json re = json::array(), im = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    json rr = json::array(), ri = json::array();
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      rr.push_back(a(i, k).real());
      ri.push_back(a(i, k).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ri));
  }
  return json{{"dim", a.rows()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

Mat operator_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("operator must be an object {dim, re, im}");
  check_keys(j, {"dim", "re", "im"});
  const json& jd = field(j, "dim");
  if (!jd.is_number_integer() || jd.get<long>() < 1) throw ValidationError("operator dim must be a positive integer");
  const int d = jd.get<int>();
  const json& re = field(j, "re");
  const bool has_im = j.contains("im");
  Mat a = Mat::Zero(d, d);
  auto read = [d](const json& rows, auto&& put) {
    if (!rows.is_array() || static_cast<int>(rows.size()) != d) throw ValidationError("operator rows do not match dim");
    for (int i = 0; i < d; ++i) {
      const json& row = rows[i];
      if (!row.is_array() || static_cast<int>(row.size()) != d)
        throw ValidationError("operator columns do not match dim");
      for (int k = 0; k < d; ++k) {
        if (!row[k].is_number()) throw ValidationError("operator entries must be numbers");
        put(i, k, row[k].get<double>());
      }
    }
  };
  read(re, [&a](int i, int k, double x) { a(i, k).real(x); });
  if (has_im) read(j.at("im"), [&a](int i, int k, double x) { a(i, k).imag(x); });
  return a;
}

json to_json(const SuperOperator& s) {
  json j = to_json(s.matrix());
  j["basis"] = "ketbra";
  j["hilbert_dim"] = s.dim();
  return j;
}

json to_json(const ProcessSpec& s) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, RtnSpec>) {
          return json{{"type", "rtn"}, {"w", x.w}, {"p", x.p}};
        } else if constexpr (std::is_same_v<T, AsymTelegraphSpec>) {
          return json{{"type", "asym"}, {"w_plus", x.w_plus}, {"w_minus", x.w_minus}, {"p", x.p}};
        } else {
          return json{{"type", "gauss-sum"}, {"w", x.base.w}, {"n", x.n_components}};
        }
      },
      s);
}

ProcessSpec process_from_json(const json& j) {
  const json& t = field(j, "type");
  if (!t.is_string()) throw ValidationError("process type must be a string");
  const std::string type = t.get<std::string>();
  ProcessSpec s;
  if (type == "rtn") {
    check_keys(j, {"type", "w", "p"});
    s = RtnSpec{number(j, "w"), j.contains("p") ? number(j, "p") : 0.0};
  } else if (type == "asym") {
    check_keys(j, {"type", "w_plus", "w_minus", "p"});
    s = AsymTelegraphSpec{number(j, "w_plus"), number(j, "w_minus"), j.contains("p") ? number(j, "p") : 0.0};
  } else if (type == "gauss-sum") {
    check_keys(j, {"type", "w", "n"});
    const json& n = field(j, "n");
    if (!n.is_number_integer()) throw ValidationError("gauss-sum n must be an integer");
    s = GaussSumSpec{RtnSpec{number(j, "w"), 0.0}, n.get<int>()};
  } else {
    throw ValidationError("unknown process type '" + type + "'");
  }
  validate(s);
  return s;
}

json to_json(const SEModel& m) {
  json j{{"hs", to_json(m.hs)}, {"he", to_json(m.he)}, {"lambda", m.lambda}, {"rhoE", to_json(m.rho_e)}};
  if (m.couplings.size() == 1) {
    j["v"] = to_json(m.v());
    j["f"] = to_json(m.f());
  } else {
    json v = json::array(), f = json::array();
    for (const auto& c : m.couplings) {
      v.push_back(to_json(c.v));
      f.push_back(to_json(c.f));
    }
    j["v"] = std::move(v);
    j["f"] = std::move(f);
  }
  return j;
}

SEModel model_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("model must be a JSON object");
  check_keys(j, {"hs", "he", "v", "f", "lambda", "rhoE"});
  SEModel m;
  m.hs = operator_from_json(field(j, "hs"));
  m.he = operator_from_json(field(j, "he"));
  m.lambda = number(j, "lambda");
  const json& v = field(j, "v");
  const json& f = field(j, "f");
  if (v.is_array() != f.is_array()) throw ValidationError("v and f must both be operators or both be arrays");
  if (v.is_array()) {
    if (v.size() != f.size() || v.empty()) throw ValidationError("v and f arrays must have equal non-zero length");
    for (size_t i = 0; i < v.size(); ++i) m.couplings.push_back({operator_from_json(v[i]), operator_from_json(f[i])});
  } else {
    m.couplings.push_back({operator_from_json(v), operator_from_json(f)});
  }
  const json& r = field(j, "rhoE");
  if (r.is_object() && r.contains("thermal")) {
    check_keys(r, {"thermal"});
    if (!r.at("thermal").is_number()) throw ValidationError("rhoE.thermal must be a number (beta)");
    require(is_square(m.he) && is_hermitian(m.he), "he must be Hermitian");
    m.rho_e = gibbs_state(m.he, r.at("thermal").get<double>());
  } else {
    m.rho_e = operator_from_json(r);
  }
  validate(m);
  return m;
}

SEModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("model file '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,value\n" << std::setprecision(17);
  for (size_t i = 0; i < tr.grid.size(); ++i) os << tr.grid[i] << ',' << tr.values[i] << '\n';
}

}  // namespace openqs
