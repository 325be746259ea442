#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tmc/gcl.hpp"
#include "tmc/policy.hpp"

namespace tmc {

using BenchmarkParams = std::map<std::string, std::int64_t>;

// Rules for one agent, in the form make_scripted_policy takes.
struct ScriptedRules {
    std::vector<std::pair<std::string, std::string>> rules;
    std::string default_action;
};

struct BenchmarkSpec {
    std::string name;
    BenchmarkParams params;     // every documented parameter, defaults filled in
    std::string source;         // model text
    ConstantOverrides overrides;  // applied when parsing `source`
    std::string model_file;     // shipped snapshot for the default parameters
    std::size_t agents = 0;
    std::vector<std::string> labels;
    // Named scripted joint policies, one entry per agent in turn order.
    std::map<std::string, std::vector<ScriptedRules>> scripted;
    std::string default_scripted;
};

std::vector<std::string> benchmark_names();

// "n=25,hp=5" -> {{"n",25},{"hp",5}}; throws InvalidParams.
BenchmarkParams parse_params(const std::string& text);

/// Throws UnknownBenchmark, or InvalidParams for unknown keys and values
/// outside the documented ranges.
BenchmarkSpec benchmark(const std::string& name, const BenchmarkParams& params = {});

GuardedProgram instantiate(const BenchmarkSpec& spec);
GuardedProgram instantiate(const std::string& name, const BenchmarkParams& params = {});

// Scripted policies of `spec.scripted[variant]` (default variant if empty).
std::vector<AgentPolicy> scripted_policies(const BenchmarkSpec& spec, const GuardedProgram& program,
                                           const std::string& variant = {});

// Generators. MABP with n agents; Tic-Tac-Toe on a size x size board
// (3, or 2 for the reduced variant); coin collection on a grid x grid board.
std::string mabp_source(std::size_t n);
std::string tictactoe_source(std::size_t size);
std::string coin_collection_source(std::size_t grid);
// Constants hp, healpots, punches, sleeps and poisons take their default
// values here and are overridden at parse time.
std::string pokemon_source();

}  // namespace tmc
