#pragma once

#include <cmath>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "newsrel/autograd.hpp"
#include "newsrel/error.hpp"
#include "newsrel/random.hpp"
#include "newsrel/text_util.hpp"

namespace newsrel {

// Named parameter tensors with stable addresses and insertion order.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  Parameter& add(const std::string& name, std::size_t rows, std::size_t cols) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    index_[name] = params_.size();
    return params_.emplace_back(name, rows, cols);
  }

  Parameter& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("no parameter named '" + name + "'");
    return params_[it->second];
  }
  const Parameter& at(const std::string& name) const {
    return const_cast<ParameterSet*>(this)->at(name);
  }

  std::deque<Parameter>& all() { return params_; }
  const std::deque<Parameter>& all() const { return params_; }
  std::size_t size() const { return params_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.grad.zero();
  }

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

namespace init {

// Normal(0, stddev) entries.
inline void normal(Parameter& p, double stddev, Rng& rng) {
  for (auto& v : p.value.data) v = stddev * standard_normal(rng);
}

// Glorot/Xavier uniform for a fan_in x fan_out weight.
inline void xavier_uniform(Parameter& p, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(p.value.rows + p.value.cols));
  for (auto& v : p.value.data) v = a * (2.0 * uniform01(rng) - 1.0);
}

inline void constant(Parameter& p, double c) {
  for (auto& v : p.value.data) v = c;
}

}  // namespace init

// ---- checkpoint container ----
//
//   newsrel-checkpoint 1
//   config <n>
//   <n lines of key=value>
//   parameters <m>
//   tensor <name> <rows> <cols>
//   <rows lines, each cols space-separated hexadecimal floats>
//   ... (m tensors)
//   end
//
// Hexadecimal floats make the round trip bit-exact.

inline constexpr std::string_view kCheckpointMagic = "newsrel-checkpoint 1";

struct Checkpoint {
  std::map<std::string, std::string> config;
  std::vector<std::pair<std::string, Matrix>> tensors;
};

inline std::string format_checkpoint(const std::map<std::string, std::string>& config,
                                     const ParameterSet& params) {
  std::string out;
  out += std::string(kCheckpointMagic) + "\n";
  out += "config " + std::to_string(config.size()) + "\n";
  for (const auto& [k, v] : config) out += k + "=" + v + "\n";
  out += "parameters " + std::to_string(params.size()) + "\n";
  for (const auto& p : params.all()) {
    out += "tensor " + p.name + " " + std::to_string(p.value.rows) + " " + std::to_string(p.value.cols) + "\n";
    for (std::size_t r = 0; r < p.value.rows; ++r) {
      for (std::size_t c = 0; c < p.value.cols; ++c) {
        if (c) out += ' ';
        out += text::hexfloat(p.value(r, c));
      }
      out += '\n';
    }
  }
  out += "end\n";
  return out;
}

inline Checkpoint parse_checkpoint(std::string_view content, const std::string& origin) {
  const auto lines = text::split(content, '\n');
  std::size_t i = 0;
  auto next = [&]() -> const std::string& {
    if (i >= lines.size()) throw ParseError(origin + ": truncated checkpoint");
    return lines[i++];
  };
  auto fail = [&](const std::string& what) {
    return ParseError(origin + ":" + std::to_string(i) + ": " + what);
  };
  if (next() != kCheckpointMagic) throw fail("not a newsrel checkpoint");
  Checkpoint ck;
  {
    const auto head = text::split(next(), ' ');
    auto n = head.size() == 2 && head[0] == "config" ? text::parse_int<std::size_t>(head[1]) : std::nullopt;
    if (!n) throw fail("expected 'config <n>'");
    for (std::size_t k = 0; k < *n; ++k) {
      const auto& line = next();
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw fail("expected key=value");
      ck.config[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  const auto head = text::split(next(), ' ');
  auto m = head.size() == 2 && head[0] == "parameters" ? text::parse_int<std::size_t>(head[1]) : std::nullopt;
  if (!m) throw fail("expected 'parameters <m>'");
  for (std::size_t k = 0; k < *m; ++k) {
    const auto th = text::split(next(), ' ');
    if (th.size() != 4 || th[0] != "tensor") throw fail("expected 'tensor <name> <rows> <cols>'");
    auto rows = text::parse_int<std::size_t>(th[2]);
    auto cols = text::parse_int<std::size_t>(th[3]);
    if (!rows || !cols) throw fail("bad tensor shape");
    Matrix mat(*rows, *cols);
    for (std::size_t r = 0; r < *rows; ++r) {
      const auto vals = text::split(next(), ' ');
      if (vals.size() != *cols && !(*cols == 0 && vals.size() == 1)) throw fail("wrong value count in tensor row");
      for (std::size_t c = 0; c < *cols; ++c) {
        auto v = text::parse_double(vals[c]);
        if (!v) throw fail("bad value '" + vals[c] + "'");
        mat(r, c) = *v;
      }
    }
    ck.tensors.emplace_back(th[1], std::move(mat));
  }
  if (next() != "end") throw fail("expected 'end'");
  return ck;
}

// Copies checkpoint tensors into a parameter set with the same layout.
inline void load_parameters(const Checkpoint& ck, ParameterSet& params) {
  if (ck.tensors.size() != params.size()) {
    throw ConfigError("checkpoint has " + std::to_string(ck.tensors.size()) + " tensors, model expects " +
                      std::to_string(params.size()));
  }
  for (const auto& [name, mat] : ck.tensors) {
    auto& p = params.at(name);
    if (!p.value.same_shape(mat)) throw ConfigError("shape mismatch for parameter '" + name + "'");
    p.value = mat;
  }
}

}  // namespace newsrel
