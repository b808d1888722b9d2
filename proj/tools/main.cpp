// Command-line front end for the spreading-speed pipeline. Assembles a JSON
// config from flags and files, then drives everything through the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kppspread.h"

using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::optional<std::int64_t> seed;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--preset", f.preset, "named preset medium/configuration");
  cmd->add_option("--out-dir", f.out_dir, "output directory");
  cmd->add_option("--seed", f.seed, "seed override for random media");
  cmd->add_flag("--quiet", f.quiet, "suppress progress output");
}

// 0 = ok; 2 = unreadable/invalid file.
int assemble_config(const CommonFlags& f, json& doc) {
  doc = json::object();
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in.good()) {
      std::cerr << "cannot open config file '" << f.config_path << "'\n";
      return 2;
    }
    doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) {
      std::cerr << "config file '" << f.config_path << "' is not valid JSON\n";
      return 2;
    }
    if (!doc.is_object()) {
      std::cerr << "config file '" << f.config_path << "' must hold a JSON object\n";
      return 2;
    }
  }
  if (!f.preset.empty()) doc["preset"] = f.preset;
  if (!f.out_dir.empty()) doc["output"]["dir"] = f.out_dir;
  if (f.seed) doc["seed"] = *f.seed;
  if (doc.empty()) {
    std::cerr << "nothing to run: pass --config or --preset\n";
    return 2;
  }
  return 0;
}

int status_exit(kpp_status s) {
  std::cerr << kpp_last_error() << "\n";
  return s == KPP_ERR_CONFIG || s == KPP_ERR_INVALID_ARGUMENT ? 2 : 3;
}

json parse_value(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (v.is_discarded()) return json(text);  // bare words sweep as strings
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spreading speeds of 1-D heterogeneous KPP fronts: eigenvalue "
               "formula vs direct simulation"};
  app.set_version_flag("--version", std::string(kpp_version()));
  app.require_subcommand(1);

  CommonFlags run_flags;
  CLI::App* run_cmd = app.add_subcommand(
      "run", "run the validate/eigen/pde/speed pipeline once");
  add_common(run_cmd, run_flags);

  CommonFlags sweep_flags;
  std::string sweep_param;
  std::string sweep_values;
  int workers = 1;
  CLI::App* sweep_cmd = app.add_subcommand(
      "sweep", "repeat the pipeline over a list of parameter values");
  add_common(sweep_cmd, sweep_flags);
  sweep_cmd->add_option("--param", sweep_param, "parameter to vary (e.g. b0, alpha, seed)")
      ->required();
  sweep_cmd->add_option("--values", sweep_values,
                        "comma-separated values, or a JSON array")
      ->required();
  sweep_cmd->add_option("--workers", workers, "worker threads across sweep items")
      ->check(CLI::PositiveNumber);

  CLI::App* list_cmd = app.add_subcommand("list-presets", "show the shipped presets");

  CLI11_PARSE(app, argc, argv);

  if (list_cmd->parsed()) {
    char* text = nullptr;
    const kpp_status s = kpp_list_presets(&text);
    if (s != KPP_OK) return status_exit(s);
    const json arr = json::parse(text);
    kpp_string_free(text);
    for (const auto& p : arr)
      std::cout << p["name"].get<std::string>() << "\n    "
                << p["description"].get<std::string>() << "\n";
    return 0;
  }

  if (run_cmd->parsed()) {
    json doc;
    if (int rc = assemble_config(run_flags, doc)) return rc;
    int exit_code = 3;
    const kpp_status s = kpp_run_config(doc.dump().c_str(), run_flags.quiet ? 1 : 0,
                                        &exit_code);
    if (s != KPP_OK) return status_exit(s);
    if (exit_code != 0 && !run_flags.quiet) std::cerr << kpp_last_error() << "\n";
    return exit_code;
  }

  // sweep
  json doc;
  if (int rc = assemble_config(sweep_flags, doc)) return rc;
  json values = json::array();
  if (!sweep_values.empty() && sweep_values.front() == '[') {
    values = json::parse(sweep_values, nullptr, false);
    if (!values.is_array()) {
      std::cerr << "--values is not a valid JSON array\n";
      return 2;
    }
  } else {
    std::stringstream ss(sweep_values);
    std::string item;
    while (std::getline(ss, item, ',')) values.push_back(parse_value(item));
  }
  int exit_code = 3;
  const kpp_status s = kpp_sweep_config(doc.dump().c_str(), sweep_param.c_str(),
                                        values.dump().c_str(), workers,
                                        sweep_flags.quiet ? 1 : 0, &exit_code);
  if (s != KPP_OK) return status_exit(s);
  if (exit_code != 0 && !sweep_flags.quiet) std::cerr << kpp_last_error() << "\n";
  return exit_code;
}
