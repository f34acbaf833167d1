#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "recgpt/recgpt.h"

namespace {

int exit_code(recgpt_status st) {
  switch (st) {
    case RECGPT_OK: return 0;
    case RECGPT_ERR_CONFIG: return 2;
    case RECGPT_ERR_DATA:
    case RECGPT_ERR_STALE: return 3;
    case RECGPT_ERR_NUMERIC: return 4;
    default: return 1;
  }
}

void print_log(const char* message, void*) {
  std::fputs(message, stderr);
  std::fputc('\n', stderr);
}

int fail(recgpt_status st) {
  std::fprintf(stderr, "recgpt: error: %s\n", recgpt_last_error());
  return exit_code(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generative sequential recommendation with prompt tuning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(recgpt_version()));

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  bool force = false;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"preprocess", "filter and split the interaction log"},
      {"pretrain", "train the decoder on next-item prediction"},
      {"gen-prompts", "generate and cache personalized prompts"},
      {"tune", "prompt-tune the pre-trained model"},
      {"eval", "evaluate the configured modes"},
      {"sweep", "sweep window size K or the recall split m_n"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "run configuration file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_flag("--force", force, "overwrite existing outputs");
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--set", overrides, "extra key=value settings")->take_all();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string stage_name = app.get_subcommands().front()->get_name();
  recgpt_stage stage;
  recgpt_status st = recgpt_stage_from_name(stage_name.c_str(), &stage);
  if (st != RECGPT_OK) return fail(st);

  recgpt_config* cfg = nullptr;
  st = recgpt_config_load(config_path.c_str(), &cfg);
  if (st != RECGPT_OK) return fail(st);

  if (!out_dir.empty()) {
    const auto abs = std::filesystem::absolute(out_dir).string();
    st = recgpt_config_set(cfg, "output_dir", abs.c_str());
  }
  for (const auto& kv : overrides) {
    if (st != RECGPT_OK) break;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "recgpt: error: --set expects key=value, got '%s'\n", kv.c_str());
      recgpt_config_free(cfg);
      return 2;
    }
    st = recgpt_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
  }
  if (st == RECGPT_OK) st = recgpt_run_stage(cfg, stage, force ? 1 : 0, print_log, nullptr);
  if (st == RECGPT_OK) {
    size_t needed = 0;
    recgpt_run_dir(cfg, nullptr, 0, &needed);
    std::string dir(needed, '\0');
    recgpt_run_dir(cfg, dir.data(), dir.size(), &needed);
    dir.resize(needed - 1);
    std::printf("%s: done (%s)\n", stage_name.c_str(), dir.c_str());
  }
  recgpt_config_free(cfg);
  return st == RECGPT_OK ? 0 : fail(st);
}
