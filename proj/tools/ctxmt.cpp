#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "ctxmt/pipeline.hpp"

using namespace ctxmt;
namespace pl = ctxmt::pipeline;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

// Runs fn over the schemes, at most `jobs` at a time. The first error wins.
template <typename Fn>
void for_each_scheme(const std::vector<ContextScheme>& schemes, int jobs, Fn fn) {
  if (jobs <= 1 || schemes.size() <= 1) {
    for (const auto& s : schemes) fn(s);
    return;
  }
  std::exception_ptr first;
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&] {
    while (true) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= schemes.size() || first) return;
        k = next++;
      }
      try {
        fn(schemes[k]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Context-aware NMT experiments: data schemes, training, evaluation"};
  app.require_subcommand(1);
  std::string config_path;
  std::string scheme_name;
  std::string mode_flag = "rf";
  std::vector<std::string> overrides;
  long long seed = -1;
  int jobs = 1;
  bool no_baseline_init = false;
  bool use_bt = false;
  bool reverse = false;
  std::vector<std::string> reports;

  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--set", overrides, "override a config key, e.g. --set train.max_steps=500");
  app.add_option("--seed", seed, "override rng_seed");
  app.add_option("--jobs", jobs, "schemes processed concurrently")->check(CLI::PositiveNumber);
  app.add_option("--scheme", scheme_name, "scheme name (default: every configured scheme)");

  auto* synth = app.add_subcommand("synth", "generate the synthetic corpus and contrastive set");
  auto* prepare = app.add_subcommand("prepare", "split, learn BPE, write per-scheme datasets");
  auto* train = app.add_subcommand("train", "train one or all schemes");
  train->add_flag("--no-baseline-init", no_baseline_init, "random init for context-aware schemes");
  train->add_flag("--bt", use_bt, "train on the back-translated dataset");
  train->add_flag("--reverse", reverse, "train the sentence-level target-to-source model");
  auto* translate = app.add_subcommand("translate", "translate the test split");
  translate->add_option("--mode", mode_flag, "target context: rf or mt")->check(CLI::IsMember({"rf", "mt"}));
  translate->add_flag("--bt", use_bt, "use the model trained on back-translated data");
  auto* evaluate = app.add_subcommand("evaluate", "BLEU, contrastive accuracy and significance");
  evaluate->add_flag("--bt", use_bt, "evaluate the model trained on back-translated data");
  evaluate->add_option("--against", reports, "reports to test significance against");
  auto* bt = app.add_subcommand("bt", "back-translate target-side data and write BT datasets");
  auto* report = app.add_subcommand("report", "table over evaluation reports");
  report->add_option("reports", reports, "report files (default: all in the work directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  pl::Log log(&std::cerr);
  try {
    if (seed >= 0) overrides.push_back("rng_seed=" + std::to_string(seed));
    auto cfg = load_experiment(config_path, overrides);
    std::vector<ContextScheme> schemes;
    if (!scheme_name.empty()) schemes.push_back(ContextScheme::make(parse_variant(scheme_name), cfg.n));
    else schemes = cfg.scheme_list();

    if (*synth) {
      pl::cmd_synth(cfg, log);
    } else if (*prepare) {
      pl::cmd_prepare(cfg, log);
    } else if (*train) {
      pl::TrainOptions opt{!no_baseline_init, use_bt, reverse};
      if (reverse) {
        pl::cmd_train(cfg, ContextScheme{}, opt, log);
      } else {
        // The baseline goes first so context-aware runs can start from it.
        std::vector<ContextScheme> rest;
        for (const auto& s : schemes) {
          if (s.variant == SchemeVariant::SentenceLevel) pl::cmd_train(cfg, s, opt, log);
          else rest.push_back(s);
        }
        for_each_scheme(rest, jobs, [&](const ContextScheme& s) { pl::cmd_train(cfg, s, opt, log); });
      }
    } else if (*translate) {
      auto mode = parse_mode(mode_flag);
      for_each_scheme(schemes, jobs, [&](const ContextScheme& s) { pl::cmd_translate(cfg, s, mode, use_bt, log); });
    } else if (*evaluate) {
      // Sequential: each report is tested against the ones already written.
      for (const auto& s : schemes) pl::cmd_evaluate(cfg, s, use_bt, reports, log);
    } else if (*bt) {
      pl::cmd_bt(cfg, log);
    } else if (*report) {
      std::cout << pl::cmd_report(cfg, reports, pl::Log(nullptr));
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure at step " << e.step() << ": " << e.what() << '\n';
    return kNumeric;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
