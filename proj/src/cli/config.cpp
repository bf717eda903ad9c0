#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "lkcert/cli.hpp"

namespace lkcert::cli {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"system",
       {"name", "mu", "sigma", "h", "zeta", "perturbed", "a", "n", "b_hat", "m1", "m2", "eta11",
        "eta12", "p1", "p2", "q11", "q12", "q21", "q22"}},
      {"lyapunov", {"w", "alpha0", "alpha1", "beta", "psi"}},
      {"perturbation", {"class", "l0", "omega"}},
      {"sim", {"step", "t_end", "record_stride", "initial_value", "trace_stride"}},
      {"certify",
       {"alpha", "safety", "margin", "eps_min", "eps_max", "eps_per_decade", "eps", "delta",
        "rho_tilde", "delta_cap", "w1_fraction", "w2_fraction", "seed"}},
      {"output", {"dir", "plot_script"}},
  };
  return keys;
}

const std::set<std::string> kSystemOverrides = {"b_hat", "m1",  "m2",  "eta11", "eta12", "p1",
                                                "p2",    "q11", "q12", "q21",   "q22"};

// "section.key" -> line number, for diagnostics.
std::map<std::string, int> index_lines(const std::string& text) {
  std::map<std::string, int> out;
  std::istringstream in(text);
  std::string line, section;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == ';' || line[first] == '#') continue;
    if (line[first] == '[') {
      const auto close = line.find(']', first);
      section = line.substr(first + 1, close == std::string::npos ? std::string::npos : close - first - 1);
      out.emplace(section, no);
      continue;
    }
    const auto eq = line.find('=');
    std::string key = line.substr(first, eq == std::string::npos ? std::string::npos : eq - first);
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
    out.emplace(section + "." + key, no);
  }
  return out;
}

class Reader {
 public:
  Reader(std::string source, std::map<std::string, int> lines)
      : source_(std::move(source)), lines_(std::move(lines)) {}

  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& msg) const {
    std::ostringstream os;
    os << source_;
    const auto it = lines_.find(key.empty() ? section : section + "." + key);
    if (it != lines_.end()) os << ":" << it->second;
    os << ": [" << section << "]";
    if (!key.empty()) os << " " << key;
    os << ": " << msg;
    throw ConfigError(os.str());
  }

  double real(const std::string& sec, const std::string& key, const std::string& text) const {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text, &used);
    } catch (const std::exception&) {
      fail(sec, key, "expected a number, got '" + text + "'");
    }
    if (used != text.size() || !std::isfinite(v)) fail(sec, key, "expected a finite number, got '" + text + "'");
    return v;
  }

  long long integer(const std::string& sec, const std::string& key, const std::string& text) const {
    const double v = real(sec, key, text);
    if (v != std::floor(v) || std::abs(v) > 9e15) fail(sec, key, "expected an integer, got '" + text + "'");
    return static_cast<long long>(v);
  }

  bool boolean(const std::string& sec, const std::string& key, std::string text) const {
    std::transform(text.begin(), text.end(), text.begin(), [](unsigned char c) { return std::tolower(c); });
    if (text == "true" || text == "yes" || text == "1" || text == "on") return true;
    if (text == "false" || text == "no" || text == "0" || text == "off") return false;
    fail(sec, key, "expected true or false, got '" + text + "'");
  }

  std::vector<double> list(const std::string& sec, const std::string& key, std::string text) const {
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream in(text);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(real(sec, key, tok));
    if (out.empty()) fail(sec, key, "expected a list of numbers");
    return out;
  }

 private:
  std::string source_;
  std::map<std::string, int> lines_;
};

void require_positive(const Reader& r, const std::string& sec, const std::string& key, double v) {
  if (!(v > 0.0)) r.fail(sec, key, "must be > 0");
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& source) {
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r(source, index_lines(text));

  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    std::ostringstream os;
    os << source << ":" << e.line() << ": " << e.message();
    throw ConfigError(os.str());
  }

  RunConfig cfg;
  cfg.source = source;

  for (const auto& [section, body] : tree) {
    const auto sit = schema().find(section);
    if (sit == schema().end()) {
      if (body.empty()) throw ConfigError(source + ": '" + section + "' is not inside a known section");
      r.fail(section, "", "unknown section");
    }
    for (const auto& [key, node] : body) {
      if (!sit->second.count(key)) r.fail(section, key, "unknown key");
      const std::string value = node.get_value<std::string>();

      if (section == "system") {
        if (key == "name") {
          if (value != "example" && value != "linear_delay" && value != "zero") {
            r.fail(section, key, "expected example, linear_delay or zero");
          }
          cfg.system = value;
        } else if (key == "mu") {
          cfg.example.mu = static_cast<int>(r.integer(section, key, value));
        } else if (key == "sigma") {
          cfg.example.sigma = static_cast<int>(r.integer(section, key, value));
        } else if (key == "h") {
          const double h = r.real(section, key, value);
          require_positive(r, section, key, h);
          cfg.example.h = h;
          cfg.linear_h = h;
        } else if (key == "zeta") {
          cfg.example.zeta = r.real(section, key, value);
        } else if (key == "perturbed") {
          cfg.example.perturbed = r.boolean(section, key, value);
        } else if (key == "a") {
          cfg.linear_a = r.real(section, key, value);
        } else if (key == "n") {
          const long long n = r.integer(section, key, value);
          if (n < 1 || n > 1000) r.fail(section, key, "must lie in [1, 1000]");
          cfg.zero_n = static_cast<int>(n);
        } else if (kSystemOverrides.count(key)) {
          const double v = r.real(section, key, value);
          if (v < 0.0) r.fail(section, key, "must be >= 0");
          cfg.system_overrides.emplace_back(key, v);
        }
      } else if (section == "lyapunov") {
        const double v = r.real(section, key, value);
        require_positive(r, section, key, v);
        cfg.lyapunov_overrides.emplace_back(key, v);
      } else if (section == "perturbation") {
        if (key == "class") {
          if (value != "A" && value != "B") r.fail(section, key, "expected A (bounded integral) or B (vanishing mean)");
          cfg.pclass = value[0];
        } else if (key == "l0") {
          const double v = r.real(section, key, value);
          if (v < 0.0) r.fail(section, key, "must be >= 0");
          cfg.l0 = v;
        } else if (key == "omega") {
          if (value != "example") r.fail(section, key, "only the built-in 'example' omega is available");
        }
      } else if (section == "sim") {
        if (key == "step") {
          cfg.sim.step = r.real(section, key, value);
          require_positive(r, section, key, cfg.sim.step);
        } else if (key == "t_end") {
          cfg.sim.t_end = r.real(section, key, value);
          require_positive(r, section, key, cfg.sim.t_end);
        } else if (key == "record_stride") {
          const long long s = r.integer(section, key, value);
          if (s < 1) r.fail(section, key, "must be >= 1");
          cfg.sim.record_stride = static_cast<std::size_t>(s);
        } else if (key == "trace_stride") {
          const long long s = r.integer(section, key, value);
          if (s < 1) r.fail(section, key, "must be >= 1");
          cfg.trace_stride = static_cast<std::size_t>(s);
        } else if (key == "initial_value") {
          cfg.initial_value = r.list(section, key, value);
        }
      } else if (section == "certify") {
        auto& c = cfg.certify;
        if (key == "eps_per_decade") {
          const long long k = r.integer(section, key, value);
          if (k < 1) r.fail(section, key, "must be >= 1");
          c.eps_per_decade = static_cast<int>(k);
          continue;
        }
        if (key == "seed") {
          const long long s = r.integer(section, key, value);
          if (s < 0) r.fail(section, key, "must be >= 0");
          cfg.seed = static_cast<std::uint64_t>(s);
          continue;
        }
        const double v = r.real(section, key, value);
        if (key == "alpha") {
          if (!(v > 1.0)) r.fail(section, key, "must be > 1");
          cfg.alpha = v;
        } else if (key == "safety" || key == "margin") {
          if (!(v > 0.0 && v < 1.0)) r.fail(section, key, "must lie in (0, 1)");
          (key == "safety" ? c.safety : c.margin) = v;
        } else if (key == "w1_fraction" || key == "w2_fraction") {
          if (!(v > 0.0 && v < 1.0)) r.fail(section, key, "must lie in (0, 1)");
          (key == "w1_fraction" ? c.wsplit.w1_fraction : c.wsplit.w2_fraction) = v;
        } else {
          require_positive(r, section, key, v);
          if (key == "eps_min") c.eps_min = v;
          else if (key == "eps_max") c.eps_max = v;
          else if (key == "eps") c.eps = v;
          else if (key == "delta") c.delta = v;
          else if (key == "rho_tilde") c.rho_tilde = v;
          else if (key == "delta_cap") c.delta_cap = v;
        }
      } else if (section == "output") {
        if (key == "dir") {
          if (value.empty()) r.fail(section, key, "must not be empty");
          cfg.out_dir = value;
        } else if (key == "plot_script") {
          cfg.plot_script = r.boolean(section, key, value);
        }
      }
    }
  }

  if (!(cfg.certify.eps_max >= cfg.certify.eps_min)) r.fail("certify", "eps_max", "must be >= eps_min");
  if (cfg.certify.wsplit.w1_fraction + cfg.certify.wsplit.w2_fraction >= 1.0) {
    r.fail("certify", "w2_fraction", "w1_fraction + w2_fraction must be < 1 so that w0 > 0");
  }

  // Physical constraints: build the system and check the time grid against h.
  try {
    const BuiltSystem sys = build_system(cfg);
    cfg.sim.validate(sys.h());
    initial_function(cfg, sys);
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

BuiltSystem build_system(const RunConfig& cfg) {
  BuiltSystem sys;
  sys.name = cfg.system;
  if (cfg.system == "example") {
    auto [spec, lyap] = build_example_system(cfg.example);
    for (const auto& [key, v] : cfg.system_overrides) {
      double* slot = key == "b_hat" ? &spec.b_hat
                     : key == "m1"  ? &spec.m1
                     : key == "m2"  ? &spec.m2
                     : key == "eta11" ? &spec.eta11
                     : key == "eta12" ? &spec.eta12
                     : key == "p1"  ? &spec.p1
                     : key == "p2"  ? &spec.p2
                     : key == "q11" ? &spec.q11
                     : key == "q12" ? &spec.q12
                     : key == "q21" ? &spec.q21
                                    : &spec.q22;
      *slot = v;
    }
    for (const auto& [key, v] : cfg.lyapunov_overrides) {
      double* slot = key == "w"        ? &lyap.w
                     : key == "alpha0" ? &lyap.alpha0
                     : key == "alpha1" ? &lyap.alpha1
                     : key == "beta"   ? &lyap.beta
                                       : &lyap.psi;
      *slot = v;
    }
    spec.validate();
    lyap.validate();
    sys.spec = std::make_unique<SystemSpec>(std::move(spec));
    sys.lyap = std::make_unique<LyapunovSpec>(std::move(lyap));

    const char cls = cfg.pclass.value_or(cfg.example.perturbed ? 'B' : 'A');
    if (cls == 'A') {
      sys.pclass = BoundedIntegral{cfg.l0.value_or(cfg.example.perturbed ? example_l0() : 0.0)};
    } else {
      if (cfg.l0) throw ConfigError(cfg.source + ": [perturbation] l0 only applies to class A");
      sys.pclass = VanishingMean{example_omega};
    }
    sys.rhs = DelayRhs::from_spec(*sys.spec);
    return sys;
  }

  if (!cfg.system_overrides.empty() || !cfg.lyapunov_overrides.empty() || cfg.pclass || cfg.l0) {
    throw ConfigError(cfg.source + ": bound-constant, lyapunov and perturbation keys apply only to the example system");
  }
  if (cfg.system == "linear_delay") {
    // x' = -a x(t-h)
    const double a = cfg.linear_a;
    sys.rhs.n = 1;
    sys.rhs.h = cfg.linear_h;
    sys.rhs.eval = [a](double, const State&, const State& xd) -> State { return -a * xd; };
  } else {
    const int n = cfg.zero_n;
    sys.rhs.n = n;
    sys.rhs.h = cfg.linear_h;
    sys.rhs.eval = [n](double, const State&, const State&) -> State { return State::Zero(n); };
  }
  return sys;
}

InitialFunction initial_function(const RunConfig& cfg, const BuiltSystem& sys) {
  State value(sys.n());
  if (cfg.initial_value.empty()) {
    value.setConstant(cfg.system == "example" ? 4.9e-4 : 1.0);
  } else if (cfg.initial_value.size() == 1) {
    value.setConstant(cfg.initial_value.front());
  } else if (static_cast<int>(cfg.initial_value.size()) == sys.n()) {
    for (int i = 0; i < sys.n(); ++i) value(i) = cfg.initial_value[static_cast<std::size_t>(i)];
  } else {
    std::ostringstream os;
    os << cfg.source << ": [sim] initial_value has " << cfg.initial_value.size()
       << " entries, system dimension is " << sys.n();
    throw ConfigError(os.str());
  }
  return InitialFunction::constant(value, sys.h());
}

}  // namespace lkcert::cli
