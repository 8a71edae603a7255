#include <cstdio>
#include <iostream>

#include "common.hpp"
#include "onealign/error.hpp"

int main(int argc, char** argv) {
  using namespace onealign;
  CLI::App app{"onealign: contrastive alignment of frozen multi-modal embeddings"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  cli::Globals g;
  app.add_option("--seed", g.seed, "Seed for all randomness");
  app.add_option("--config", g.config, "JSON config file (flags override its values)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads, 0 = ONEALIGN_THREADS or all cores");
  app.add_flag("--allow-missing", g.allow_missing, "Drop manifest rows with unknown ids instead of failing");
  app.add_flag("--record-time", g.record_time, "Record wall time in report manifests");

  cli::register_data(app, g);
  cli::register_align(app, g);
  cli::register_probe(app, g);
  cli::register_stats(app, g);
  cli::register_selfcheck(app, g);
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::RuntimeError& e) {
    return e.get_exit_code();
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::NumericFailure ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
