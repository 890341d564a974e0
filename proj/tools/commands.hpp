#ifndef FREQLAB_TOOLS_COMMANDS_HPP
#define FREQLAB_TOOLS_COMMANDS_HPP

#include <CLI11.hpp>

namespace freqlab::cli {

/// Options shared by every subcommand.
struct Common {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string out;
};

void add_ingest(CLI::App& app);
void add_split(CLI::App& app);
void add_transform(CLI::App& app);
void add_stats(CLI::App& app);
void add_heatmap(CLI::App& app);
void add_photos(CLI::App& app);
void add_synth(CLI::App& app);
void add_perturb(CLI::App& app);
void add_train(CLI::App& app);
void add_eval(CLI::App& app);
void add_gridsearch(CLI::App& app);
void add_weights(CLI::App& app);
void add_run(CLI::App& app);

}  // namespace freqlab::cli

#endif  // FREQLAB_TOOLS_COMMANDS_HPP
