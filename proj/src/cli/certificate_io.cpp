#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

#include "lkcert/cli.hpp"

namespace lkcert::cli {

namespace {

std::vector<std::pair<const char*, double Certificate::*>> real_fields() {
  return {
      {"alpha", &Certificate::alpha},   {"eps", &Certificate::eps},
      {"omega", &Certificate::omega},   {"omega_over_eps", &Certificate::omega_over_eps},
      {"w", &Certificate::w},           {"delta", &Certificate::delta},
      {"c0", &Certificate::c0},         {"c1", &Certificate::c1},
      {"c2", &Certificate::c2},         {"a1", &Certificate::a1},
      {"b0", &Certificate::b0},         {"b1", &Certificate::b1},
      {"b2", &Certificate::b2},         {"b3", &Certificate::b3},
      {"Delta", &Certificate::Delta},   {"rho", &Certificate::rho},
      {"rho_tilde", &Certificate::rho_tilde}, {"c_hat1", &Certificate::c_hat1},
      {"c_hat2", &Certificate::c_hat2}, {"alpha1", &Certificate::alpha1},
      {"gamma", &Certificate::gamma},   {"mu", &Certificate::mu},
      {"sigma", &Certificate::sigma},   {"h", &Certificate::h},
  };
}

std::string render(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_certificate(std::ostream& out, const Certificate& c) {
  out << "kind = " << (c.kind == CaseKind::BoundedIntegral ? "bounded_integral" : "vanishing_mean") << "\n";
  for (const auto& [key, member] : real_fields()) {
    out << key << " = " << render(c.*member) << "\n";
    if (std::string(key) == "w") {
      out << "w0 = " << render(c.wsplit.w0) << "\n";
      out << "w1 = " << render(c.wsplit.w1) << "\n";
      out << "w2 = " << render(c.wsplit.w2) << "\n";
    }
  }
}

Certificate read_certificate(std::istream& in, const std::string& source) {
  std::map<std::string, double Certificate::*> reals;
  for (const auto& [key, member] : real_fields()) reals.emplace(key, member);

  Certificate c;
  std::map<std::string, bool> seen;
  std::string line;
  int no = 0;
  auto fail = [&](const std::string& msg) {
    std::ostringstream os;
    os << source << ":" << no << ": " << msg;
    throw ConfigError(os.str());
  };
  while (std::getline(in, line)) {
    ++no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (seen[key]) fail("duplicate key '" + key + "'");
    seen[key] = true;

    if (key == "kind") {
      if (value == "bounded_integral") c.kind = CaseKind::BoundedIntegral;
      else if (value == "vanishing_mean") c.kind = CaseKind::VanishingMean;
      else fail("unknown certificate kind '" + value + "'");
      continue;
    }
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(v)) {
      fail("'" + key + "' needs a finite number");
    }
    if (key == "w0") c.wsplit.w0 = v;
    else if (key == "w1") c.wsplit.w1 = v;
    else if (key == "w2") c.wsplit.w2 = v;
    else if (auto it = reals.find(key); it != reals.end()) c.*(it->second) = v;
    else fail("unknown key '" + key + "'");
  }
  std::vector<std::string> required = {"kind", "w0", "w1", "w2"};
  for (const auto& [key, member] : real_fields()) required.emplace_back(key);
  for (const auto& key : required) {
    if (!seen[key]) throw ConfigError(source + ": missing key '" + key + "'");
  }
  return c;
}

void save_certificate(const std::string& path, const Certificate& cert) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write certificate '" + path + "'");
  write_certificate(out, cert);
  if (!out) throw ConfigError("failed writing certificate '" + path + "'");
}

Certificate load_certificate(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open certificate '" + path + "'");
  return read_certificate(in, path);
}

}  // namespace lkcert::cli
