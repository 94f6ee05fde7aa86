#include "blockprior/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "blockprior/format.hpp"

namespace blockprior {

namespace {

const char* kHeader = "method,alpha,n,median,mad,trials,seconds,seed";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

template <typename T>
T parse_integer(const std::string& s, const char* what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument(std::string("parse_csv: bad ") + what + " '" + s + "'");
  }
  return v;
}

std::string fixed3(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string emit_csv(const RiskTable& table) {
  std::ostringstream os;
  os << "# blockprior " << table.version << " seed=" << table.master_seed << " config=" << hex64(table.config_hash)
     << '\n';
  for (const auto& [key, tail] : table.tail_energy) {
    os << "# tail alpha=" << format_double(key.first) << " n=" << key.second << " energy=" << format_double(tail)
       << '\n';
  }
  for (const CellResult& r : table.rows) {
    if (!r.error) continue;
    std::string msg = *r.error;
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    os << "# error method=" << to_string(r.method) << " alpha=" << format_double(r.alpha) << " n=" << r.n << ' '
       << msg << '\n';
  }
  os << kHeader << '\n';
  for (const CellResult& r : table.rows) {
    os << to_string(r.method) << ',' << format_double(r.alpha) << ',' << r.n << ',' << format_double(r.median) << ','
       << format_double(r.mad) << ',' << r.trials << ',' << format_double(r.seconds) << ',' << r.seed << '\n';
  }
  return os.str();
}

RiskTable parse_csv(const std::string& text) {
  RiskTable table;
  table.rows.clear();
  std::istringstream is(text);
  std::string line;
  bool header_seen = false;
  struct PendingError {
    std::string method, alpha, n, message;
  };
  std::vector<PendingError> errors;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string word;
      ls >> word;
      if (word == "blockprior") {
        ls >> table.version;
        while (ls >> word) {
          if (word.rfind("seed=", 0) == 0) table.master_seed = parse_integer<std::uint64_t>(word.substr(5), "seed");
          if (word.rfind("config=", 0) == 0) {
            const std::string h = word.substr(7);
            std::uint64_t v = 0;
            const auto [ptr, ec] = std::from_chars(h.data(), h.data() + h.size(), v, 16);
            if (ec != std::errc() || ptr != h.data() + h.size()) throw std::invalid_argument("parse_csv: bad config hash");
            table.config_hash = v;
          }
        }
      } else if (word == "tail") {
        std::string a, n, e;
        ls >> a >> n >> e;
        if (a.rfind("alpha=", 0) != 0 || n.rfind("n=", 0) != 0 || e.rfind("energy=", 0) != 0) {
          throw std::invalid_argument("parse_csv: malformed tail comment");
        }
        table.tail_energy[{parse_double(a.substr(6)), parse_integer<int>(n.substr(2), "n")}] =
            parse_double(e.substr(7));
      } else if (word == "error") {
        PendingError pe;
        ls >> pe.method >> pe.alpha >> pe.n;
        std::getline(ls, pe.message);
        if (!pe.message.empty() && pe.message[0] == ' ') pe.message.erase(0, 1);
        errors.push_back(pe);
      }
      continue;
    }
    if (!header_seen) {
      if (line != kHeader) throw std::invalid_argument("parse_csv: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 8) throw std::invalid_argument("parse_csv: expected 8 fields in '" + line + "'");
    CellResult r;
    r.method = parse_method(f[0]);
    r.alpha = parse_double(f[1]);
    r.n = parse_integer<int>(f[2], "n");
    r.median = parse_double(f[3]);
    r.mad = parse_double(f[4]);
    r.trials = parse_integer<int>(f[5], "trials");
    r.seconds = parse_double(f[6]);
    r.seed = parse_integer<std::uint64_t>(f[7], "seed");
    table.rows.push_back(r);
  }
  if (!header_seen) throw std::invalid_argument("parse_csv: missing header");
  for (const PendingError& pe : errors) {
    for (CellResult& r : table.rows) {
      if ("method=" + to_string(r.method) == pe.method && "alpha=" + format_double(r.alpha) == pe.alpha &&
          "n=" + std::to_string(r.n) == pe.n) {
        r.error = pe.message;
      }
    }
  }
  return table;
}

std::string emit_markdown(const RiskTable& table) {
  std::vector<int> ns;
  std::vector<double> alphas;
  std::vector<Method> methods;
  for (const CellResult& r : table.rows) {
    if (std::find(ns.begin(), ns.end(), r.n) == ns.end()) ns.push_back(r.n);
    if (std::find(alphas.begin(), alphas.end(), r.alpha) == alphas.end()) alphas.push_back(r.alpha);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  std::sort(ns.begin(), ns.end());
  std::sort(alphas.begin(), alphas.end());
  std::sort(methods.begin(), methods.end());
  const std::size_t rows = (methods.size() + 1) / 2;

  auto cell_text = [&](Method m, double alpha, int n) {
    const CellResult* r = table.find(m, alpha, n);
    if (!r) return std::string("");
    if (r->error) return std::string("failed");
    return fixed3(r->median) + " (" + fixed3(r->mad) + ")";
  };

  std::ostringstream os;
  os << "<!-- blockprior " << table.version << " seed=" << table.master_seed << " config=" << hex64(table.config_hash)
     << " -->\n";
  for (int n : ns) {
    os << "\n### Estimation errors for n = " << n << ": median (MAD)\n\n";
    os << "| alpha | Method | risk | Method | risk |\n";
    os << "|---|---|---|---|---|\n";
    for (double alpha : alphas) {
      for (std::size_t i = 0; i < rows; ++i) {
        os << "| " << (i == 0 ? format_double(alpha) : "") << " | ";
        const Method left = methods[i];
        os << to_string(left) << " | " << cell_text(left, alpha, n) << " | ";
        if (i + rows < methods.size()) {
          const Method right = methods[i + rows];
          os << to_string(right) << " | " << cell_text(right, alpha, n) << " |\n";
        } else {
          os << " |  |\n";
        }
      }
    }
  }
  return os.str();
}

}  // namespace blockprior
