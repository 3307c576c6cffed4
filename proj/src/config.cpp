// Copyright (c) 2026 The csgflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "csg/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "csg/error.hpp"

namespace csg {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  check(end == s.c_str() + s.size() && !s.empty(),
        "config: invalid number for " + key + ": '" + s + "'");
  return v;
}

long long parse_int(const std::string& key, const std::string& s) {
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  check(end == s.c_str() + s.size() && !s.empty(),
        "config: invalid integer for " + key + ": '" + s + "'");
  return v;
}

uint64_t parse_u64(const std::string& key, const std::string& s) {
  char* end = nullptr;
  unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  check(end == s.c_str() + s.size() && !s.empty(),
        "config: invalid integer for " + key + ": '" + s + "'");
  return v;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::vector<Field> field_registry() {
  auto dbl = [](std::string sec, std::string key, auto getter, auto setter) {
    return Field{sec, key,
                 [getter](const RunConfig& c) { return fmt_double(getter(c)); },
                 [setter, sec, key](RunConfig& c, const std::string& v) {
                   setter(c, parse_double(sec + "." + key, v));
                 }};
  };
  auto integer = [](std::string sec, std::string key, auto getter, auto setter) {
    return Field{sec, key,
                 [getter](const RunConfig& c) { return std::to_string(getter(c)); },
                 [setter, sec, key](RunConfig& c, const std::string& v) {
                   setter(c, parse_int(sec + "." + key, v));
                 }};
  };

  std::vector<Field> f;
  // [run]
  f.push_back(integer("run", "s_total", [](const RunConfig& c) { return c.train.s_total; },
                      [](RunConfig& c, long long v) { c.train.s_total = static_cast<int>(v); }));
  f.push_back(dbl("run", "warmup_fraction",
                  [](const RunConfig& c) { return c.train.warmup_fraction; },
                  [](RunConfig& c, double v) {
                    c.train.warmup_fraction = v;
                    c.train.corruption.warmup_fraction = v;
                  }));
  f.push_back(dbl("run", "learning_rate",
                  [](const RunConfig& c) { return c.train.learning_rate; },
                  [](RunConfig& c, double v) { c.train.learning_rate = v; }));
  f.push_back(dbl("run", "weight_decay",
                  [](const RunConfig& c) { return c.train.weight_decay; },
                  [](RunConfig& c, double v) { c.train.weight_decay = v; }));
  f.push_back(integer("run", "batch_size", [](const RunConfig& c) { return c.train.batch_size; },
                      [](RunConfig& c, long long v) { c.train.batch_size = static_cast<int>(v); }));
  f.push_back(Field{"run", "seed",
                    [](const RunConfig& c) { return std::to_string(c.train.seed); },
                    [](RunConfig& c, const std::string& v) {
                      c.train.seed = parse_u64("run.seed", v);
                      c.seed_in_file = true;
                    }});
  f.push_back(integer("run", "checkpoint_every",
                      [](const RunConfig& c) { return c.train.checkpoint_every; },
                      [](RunConfig& c, long long v) {
                        c.train.checkpoint_every = static_cast<int>(v);
                      }));
  f.push_back(Field{"run", "cond_mode",
                    [](const RunConfig& c) {
                      return c.train.cond_mode == CondMode::reference_guided
                                 ? std::string("reference")
                                 : std::string("text");
                    },
                    [](RunConfig& c, const std::string& v) {
                      if (v == "reference")
                        c.train.cond_mode = CondMode::reference_guided;
                      else if (v == "text")
                        c.train.cond_mode = CondMode::text_guided;
                      else
                        fail("config: run.cond_mode must be 'reference' or 'text', got '" + v +
                             "'");
                    }});
  f.push_back(Field{"run", "precision",
                    [](const RunConfig& c) {
                      return c.train.precision == DType::F64 ? std::string("f64")
                                                             : std::string("f32");
                    },
                    [](RunConfig& c, const std::string& v) {
                      if (v == "f64")
                        c.train.precision = DType::F64;
                      else if (v == "f32")
                        c.train.precision = DType::F32;
                      else
                        fail("config: run.precision must be 'f64' or 'f32', got '" + v + "'");
                    }});
  f.push_back(integer("run", "hidden", [](const RunConfig& c) { return c.train.hidden; },
                      [](RunConfig& c, long long v) { c.train.hidden = static_cast<int>(v); }));
  f.push_back(integer("run", "embed_dim", [](const RunConfig& c) { return c.train.embed_dim; },
                      [](RunConfig& c, long long v) { c.train.embed_dim = static_cast<int>(v); }));
  f.push_back(integer("run", "num_styles",
                      [](const RunConfig& c) { return c.train.num_styles; },
                      [](RunConfig& c, long long v) {
                        c.train.num_styles = static_cast<int>(v);
                        c.data.num_styles = static_cast<int>(v);
                      }));
  // [corruption]
  f.push_back(dbl("corruption", "gamma_content",
                  [](const RunConfig& c) { return c.train.corruption.gamma_content; },
                  [](RunConfig& c, double v) { c.train.corruption.gamma_content = v; }));
  f.push_back(dbl("corruption", "gamma_style",
                  [](const RunConfig& c) { return c.train.corruption.gamma_style; },
                  [](RunConfig& c, double v) { c.train.corruption.gamma_style = v; }));
  f.push_back(dbl("corruption", "replace_prob",
                  [](const RunConfig& c) { return c.train.corruption.replace_prob; },
                  [](RunConfig& c, double v) { c.train.corruption.replace_prob = v; }));
  // [frequency]
  f.push_back(dbl("frequency", "tau",
                  [](const RunConfig& c) { return c.train.frequency.tau; },
                  [](RunConfig& c, double v) { c.train.frequency.tau = v; }));
  f.push_back(Field{"frequency", "sigma_levels",
                    [](const RunConfig& c) {
                      std::string out;
                      for (size_t i = 0; i < c.train.frequency.sigma_levels.size(); ++i) {
                        if (i) out += ",";
                        out += fmt_double(c.train.frequency.sigma_levels[i]);
                      }
                      return out;
                    },
                    [](RunConfig& c, const std::string& v) {
                      std::vector<double> levels;
                      std::stringstream ss(v);
                      std::string item;
                      while (std::getline(ss, item, ','))
                        levels.push_back(parse_double("frequency.sigma_levels", trim(item)));
                      check(!levels.empty(), "config: frequency.sigma_levels is empty");
                      c.train.frequency.sigma_levels = levels;
                      c.train.frequency.pyramid_levels = static_cast<int>(levels.size());
                    }});
  // [loss]
  f.push_back(dbl("loss", "lambda_target",
                  [](const RunConfig& c) { return c.train.semantic.lambda_target; },
                  [](RunConfig& c, double v) { c.train.semantic.lambda_target = v; }));
  f.push_back(dbl("loss", "lambda_content",
                  [](const RunConfig& c) { return c.train.semantic.lambda_content; },
                  [](RunConfig& c, double v) { c.train.semantic.lambda_content = v; }));
  f.push_back(dbl("loss", "lambda_style_repulsion",
                  [](const RunConfig& c) { return c.train.semantic.lambda_style_repulsion; },
                  [](RunConfig& c, double v) { c.train.semantic.lambda_style_repulsion = v; }));
  f.push_back(dbl("loss", "lambda_freq",
                  [](const RunConfig& c) { return c.train.freq_loss.lambda_freq; },
                  [](RunConfig& c, double v) { c.train.freq_loss.lambda_freq = v; }));
  f.push_back(dbl("loss", "w_low", [](const RunConfig& c) { return c.train.freq_loss.w_low; },
                  [](RunConfig& c, double v) { c.train.freq_loss.w_low = v; }));
  f.push_back(dbl("loss", "w_high", [](const RunConfig& c) { return c.train.freq_loss.w_high; },
                  [](RunConfig& c, double v) { c.train.freq_loss.w_high = v; }));
  // [reward]
  f.push_back(dbl("reward", "omega_content",
                  [](const RunConfig& c) { return c.train.reward.omega_content; },
                  [](RunConfig& c, double v) { c.train.reward.omega_content = v; }));
  f.push_back(dbl("reward", "omega_style",
                  [](const RunConfig& c) { return c.train.reward.omega_style; },
                  [](RunConfig& c, double v) { c.train.reward.omega_style = v; }));
  f.push_back(dbl("reward", "omega_perceptual",
                  [](const RunConfig& c) { return c.train.reward.omega_perceptual; },
                  [](RunConfig& c, double v) { c.train.reward.omega_perceptual = v; }));
  f.push_back(dbl("reward", "omega_adversarial",
                  [](const RunConfig& c) { return c.train.reward.omega_adversarial; },
                  [](RunConfig& c, double v) { c.train.reward.omega_adversarial = v; }));
  f.push_back(dbl("reward", "lambda_pixel",
                  [](const RunConfig& c) { return c.train.lambda_pixel; },
                  [](RunConfig& c, double v) { c.train.lambda_pixel = v; }));
  f.push_back(dbl("reward", "pg_sigma", [](const RunConfig& c) { return c.train.pg_sigma; },
                  [](RunConfig& c, double v) { c.train.pg_sigma = v; }));
  f.push_back(dbl("reward", "baseline_decay",
                  [](const RunConfig& c) { return c.train.baseline_decay; },
                  [](RunConfig& c, double v) { c.train.baseline_decay = v; }));
  // [data]
  f.push_back(integer("data", "n", [](const RunConfig& c) { return c.data.n; },
                      [](RunConfig& c, long long v) { c.data.n = static_cast<int>(v); }));
  f.push_back(integer("data", "size", [](const RunConfig& c) { return c.data.size; },
                      [](RunConfig& c, long long v) { c.data.size = static_cast<int>(v); }));
  f.push_back(Field{"data", "seed",
                    [](const RunConfig& c) { return std::to_string(c.data.seed); },
                    [](RunConfig& c, const std::string& v) {
                      c.data.seed = parse_u64("data.seed", v);
                    }});
  f.push_back(Field{"data", "holdout_styles",
                    [](const RunConfig& c) {
                      std::string out;
                      for (int s : c.data.holdout_styles) {
                        if (!out.empty()) out += ",";
                        out += std::to_string(s);
                      }
                      return out;
                    },
                    [](RunConfig& c, const std::string& v) {
                      c.data.holdout_styles.clear();
                      std::stringstream ss(v);
                      std::string item;
                      while (std::getline(ss, item, ',')) {
                        item = trim(item);
                        if (item.empty()) continue;
                        c.data.holdout_styles.insert(
                            static_cast<int>(parse_int("data.holdout_styles", item)));
                      }
                    }});
  f.push_back(Field{"data", "dir", [](const RunConfig& c) { return c.data_dir; },
                    [](RunConfig& c, const std::string& v) { c.data_dir = v; }});
  // [eval]
  f.push_back(integer("eval", "n", [](const RunConfig& c) { return c.eval.n; },
                      [](RunConfig& c, long long v) { c.eval.n = static_cast<int>(v); }));
  f.push_back(integer("eval", "steps", [](const RunConfig& c) { return c.eval.steps; },
                      [](RunConfig& c, long long v) { c.eval.steps = static_cast<int>(v); }));
  f.push_back(Field{"eval", "seed",
                    [](const RunConfig& c) { return std::to_string(c.eval.seed); },
                    [](RunConfig& c, const std::string& v) {
                      c.eval.seed = parse_u64("eval.seed", v);
                    }});
  return f;
}

const Field* find_field(const std::vector<Field>& fields, const std::string& section,
                        const std::string& key) {
  for (const Field& f : fields) {
    if (f.section == section && f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.data.num_styles = cfg.train.num_styles;
  return cfg;
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg = default_run_config();
  auto fields = field_registry();

  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      check(t.back() == ']', "config: malformed section header at line " +
                                 std::to_string(lineno) + ": " + t);
      section = trim(t.substr(1, t.size() - 2));
      bool known = false;
      for (const Field& f : fields) known = known || f.section == section;
      check(known, "config: unknown section [" + section + "] at line " + std::to_string(lineno));
      continue;
    }
    size_t eq = t.find('=');
    check(eq != std::string::npos,
          "config: expected 'key = value' at line " + std::to_string(lineno) + ": " + t);
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    check(!section.empty(), "config: key '" + key + "' before any section at line " +
                                std::to_string(lineno));
    const Field* f = find_field(fields, section, key);
    check(f != nullptr, "config: unknown key '" + section + "." + key + "' at line " +
                            std::to_string(lineno));
    f->set(cfg, value);
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string serialize_run_config(const RunConfig& cfg) {
  auto fields = field_registry();
  std::string out;
  std::string section;
  for (const Field& f : fields) {
    if (f.section != section) {
      if (!out.empty()) out += "\n";
      out += "[" + f.section + "]\n";
      section = f.section;
    }
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

void apply_override(RunConfig& cfg, const std::string& dotted_key, const std::string& value) {
  size_t dot = dotted_key.find('.');
  check(dot != std::string::npos,
        "config: override key must be 'section.key', got '" + dotted_key + "'");
  auto fields = field_registry();
  const Field* f = find_field(fields, dotted_key.substr(0, dot), dotted_key.substr(dot + 1));
  check(f != nullptr, "config: unknown key '" + dotted_key + "'");
  f->set(cfg, value);
}

}  // namespace csg
