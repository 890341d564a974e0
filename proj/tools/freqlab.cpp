#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "commands.hpp"
#include "freqlab/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"freqlab: frequency-domain analysis and detection of upsampled images"};
  app.set_version_flag("--version", FREQLAB_VERSION);
  app.require_subcommand(1);

  freqlab::cli::add_ingest(app);
  freqlab::cli::add_split(app);
  freqlab::cli::add_transform(app);
  freqlab::cli::add_stats(app);
  freqlab::cli::add_heatmap(app);
  freqlab::cli::add_photos(app);
  freqlab::cli::add_synth(app);
  freqlab::cli::add_perturb(app);
  freqlab::cli::add_train(app);
  freqlab::cli::add_eval(app);
  freqlab::cli::add_gridsearch(app);
  freqlab::cli::add_weights(app);
  freqlab::cli::add_run(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const freqlab::Error& e) {
    std::fprintf(stderr, "freqlab: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "freqlab: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
