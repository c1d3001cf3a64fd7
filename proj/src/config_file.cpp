#include "mird/config_file.hpp"

#include <cctype>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "mird/common.hpp"

namespace mird {
namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad_value(const std::string& section, const std::string& key,
                            const std::string& value, const char* want) {
  throw ConfigError("config: " + section + "." + key + " = '" + value +
                    "' is not a valid " + want);
}

long long to_int(const std::string& sec, const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    long long out = std::stoll(v, &used);
    if (used != v.size()) bad_value(sec, key, v, "integer");
    return out;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(sec, key, v, "integer");
  }
}

double to_double(const std::string& sec, const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) bad_value(sec, key, v, "number");
    return out;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(sec, key, v, "number");
  }
}

bool to_bool(const std::string& sec, const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(sec, key, v, "boolean (true/false)");
}

}  // namespace

void apply_config_key(RunSettings& s, const std::string& section,
                      const std::string& key, const std::string& value) {
  auto i = [&] { return to_int(section, key, value); };
  auto d = [&] { return to_double(section, key, value); };
  auto b = [&] { return to_bool(section, key, value); };

  if (section == "train") {
    if (key == "mode") { s.mode = parse_train_mode(value); return; }
    if (key == "alpha") { s.train.alpha = d(); return; }
    if (key == "eta1") { s.train.eta1 = d(); return; }
    if (key == "eta2") { s.train.eta2 = d(); return; }
    if (key == "epochs") { s.train.epochs = static_cast<int>(i()); return; }
    if (key == "inner_steps") { s.train.inner_steps = static_cast<int>(i()); return; }
    if (key == "batch_size") { s.train.batch_size = static_cast<int>(i()); return; }
    if (key == "split_rate") { s.train.split_rate = static_cast<int>(i()); return; }
    if (key == "d") { s.train.d = static_cast<int>(i()); return; }
    if (key == "d_w") { s.train.d_w = static_cast<int>(i()); return; }
    if (key == "epsilon") { s.train.epsilon = d(); return; }
    if (key == "seed") {
      long long v = i();
      if (v < 0) bad_value(section, key, value, "non-negative integer");
      s.train.seed = static_cast<std::uint64_t>(v);
      s.synth.seed = s.train.seed;
      return;
    }
    if (key == "loss_guard") { s.train.loss_guard = d(); return; }
    if (key == "clip_norm") { s.train.clip_norm = d(); return; }
    if (key == "weight_decay") { s.train.weight_decay = d(); return; }
    if (key == "with_input_terms") { s.train.with_input_terms = b(); return; }
    if (key == "with_recon") { s.train.with_recon = b(); return; }
    throw ConfigError("config: unknown key '" + key + "' in section [train]");
  }

  if (section == "data") {
    if (key == "source") {
      if (value == "synthetic") { s.synthetic = true; return; }
      if (value == "files") { s.synthetic = false; return; }
      bad_value(section, key, value, "source (synthetic/files)");
    }
    if (key == "n_train") { s.synth.n_train = static_cast<int>(i()); return; }
    if (key == "n_val") { s.synth.n_val = static_cast<int>(i()); return; }
    if (key == "n_test") { s.synth.n_test = static_cast<int>(i()); return; }
    if (key == "n_unlabeled") { s.synth.n_unlabeled = static_cast<int>(i()); return; }
    if (key == "len_min") { s.synth.len_min = static_cast<int>(i()); return; }
    if (key == "len_max") { s.synth.len_max = static_cast<int>(i()); return; }
    if (key == "d_v") { s.synth.d_v = static_cast<int>(i()); return; }
    if (key == "d_a") { s.synth.d_a = static_cast<int>(i()); return; }
    if (key == "vocab") { s.synth.vocab = static_cast<int>(i()); return; }
    if (key == "shared_dim") { s.synth.shared_dim = static_cast<int>(i()); return; }
    if (key == "private_dim") { s.synth.private_dim = static_cast<int>(i()); return; }
    if (key == "noise") { s.synth.noise = d(); return; }
    if (key == "train_path") { s.train_path = value; return; }
    if (key == "val_path") { s.val_path = value; return; }
    if (key == "test_path") { s.test_path = value; return; }
    if (key == "unlabeled_path") { s.unlabeled_path = value; return; }
    throw ConfigError("config: unknown key '" + key + "' in section [data]");
  }

  throw ConfigError("config: unknown section [" + section + "]");
}

RunSettings parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");

  RunSettings s;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3)
        throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                          ": malformed section header '" + t + "'");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                        ": expected key = value, got '" + t + "'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                        ": empty key");
    if (section.empty())
      throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                        ": key '" + key + "' appears before any [section]");
    try {
      apply_config_key(s, section, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (" + path + ":" +
                        std::to_string(line_no) + ")");
    }
  }
  return s;
}

std::string settings_snapshot_json(const RunSettings& s) {
  nlohmann::json j;
  j["train"]["mode"] = train_mode_name(s.mode);
  j["train"]["alpha"] = s.train.alpha;
  j["train"]["eta1"] = s.train.eta1;
  j["train"]["eta2"] = s.train.eta2;
  j["train"]["epochs"] = s.train.epochs;
  j["train"]["inner_steps"] = s.train.inner_steps;
  j["train"]["batch_size"] = s.train.batch_size;
  j["train"]["split_rate"] = s.train.split_rate;
  j["train"]["d"] = s.train.d;
  j["train"]["d_w"] = s.train.d_w;
  j["train"]["epsilon"] = s.train.epsilon;
  j["train"]["seed"] = s.train.seed;
  j["train"]["loss_guard"] = s.train.loss_guard;
  j["train"]["clip_norm"] = s.train.clip_norm;
  j["train"]["weight_decay"] = s.train.weight_decay;
  j["train"]["with_input_terms"] = s.train.with_input_terms;
  j["train"]["with_recon"] = s.train.with_recon;
  j["data"]["source"] = s.synthetic ? "synthetic" : "files";
  if (s.synthetic) {
    j["data"]["n_train"] = s.synth.n_train;
    j["data"]["n_val"] = s.synth.n_val;
    j["data"]["n_test"] = s.synth.n_test;
    j["data"]["n_unlabeled"] = s.synth.n_unlabeled;
    j["data"]["len_min"] = s.synth.len_min;
    j["data"]["len_max"] = s.synth.len_max;
    j["data"]["d_v"] = s.synth.d_v;
    j["data"]["d_a"] = s.synth.d_a;
    j["data"]["vocab"] = s.synth.vocab;
    j["data"]["shared_dim"] = s.synth.shared_dim;
    j["data"]["private_dim"] = s.synth.private_dim;
    j["data"]["noise"] = s.synth.noise;
  } else {
    j["data"]["train_path"] = s.train_path;
    j["data"]["val_path"] = s.val_path;
    j["data"]["test_path"] = s.test_path;
    j["data"]["unlabeled_path"] = s.unlabeled_path;
  }
  return j.dump(2);
}

}  // namespace mird
