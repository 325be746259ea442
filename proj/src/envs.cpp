#include "tmc/envs.hpp"

#include <algorithm>
#include <charconv>

#include <fmt/format.h>

#include "tmc/errors.hpp"

namespace tmc {

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

struct ParamRange {
    const char* name;
    std::int64_t lo, hi, fallback;
};

BenchmarkParams resolve(const std::string& bench, const std::vector<ParamRange>& ranges,
                        const BenchmarkParams& given) {
    BenchmarkParams out;
    for (const auto& r : ranges) out[r.name] = r.fallback;
    for (const auto& [key, value] : given) {
        auto it = std::find_if(ranges.begin(), ranges.end(), [&](const ParamRange& r) { return key == r.name; });
        if (it == ranges.end()) {
            std::vector<std::string> known;
            for (const auto& r : ranges) known.emplace_back(r.name);
            throw InvalidParams(fmt::format("{} has no parameter '{}' (known: {})", bench, key, join(known, ", ")));
        }
        if (value < it->lo || value > it->hi) {
            throw InvalidParams(fmt::format("{}: {}={} outside [{}..{}]", bench, key, value, it->lo, it->hi));
        }
        out[key] = value;
    }
    return out;
}

bool all_defaults(const std::vector<ParamRange>& ranges, const BenchmarkParams& p) {
    return std::all_of(ranges.begin(), ranges.end(), [&](const ParamRange& r) { return p.at(r.name) == r.fallback; });
}

const std::vector<ParamRange> kMabpParams = {{"n_agents", 1, 1000, 2}};
const std::vector<ParamRange> kTicTacToeParams = {{"size", 2, 3, 3}};
const std::vector<ParamRange> kCoinParams = {{"grid", 2, 8, 4}};
const std::vector<ParamRange> kPokemonParams = {
    {"hp", 1, 100, 100}, {"healpots", 0, 9, 3}, {"punches", 0, 9, 5}, {"sleeps", 0, 9, 2}, {"poisons", 0, 9, 2}};

// -- Tic-Tac-Toe -------------------------------------------------------------

std::string cell(std::size_t r, std::size_t c) { return fmt::format("cell_{}{}", r, c); }

std::vector<std::vector<std::pair<std::size_t, std::size_t>>> board_lines(std::size_t n) {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> lines;
    for (std::size_t r = 0; r < n; ++r) {
        lines.emplace_back();
        for (std::size_t c = 0; c < n; ++c) lines.back().emplace_back(r, c);
    }
    for (std::size_t c = 0; c < n; ++c) {
        lines.emplace_back();
        for (std::size_t r = 0; r < n; ++r) lines.back().emplace_back(r, c);
    }
    lines.emplace_back();
    for (std::size_t i = 0; i < n; ++i) lines.back().emplace_back(i, i);
    lines.emplace_back();
    for (std::size_t i = 0; i < n; ++i) lines.back().emplace_back(i, n - 1 - i);
    return lines;
}

// -- Pokemon -----------------------------------------------------------------

// Update fragment for agent `turn` dealing `dmg` to Pokemon `opp` plus the
// pending poison tick, handing the turn to `next`.
std::string strike(int opp, int dmg, int next) {
    return fmt::format("(HP_{0}'=max(HP_{0}-{1}-tick_{0},0))&(poisoned_{0}'=pdec_{0})&(done'=(HP_{0}-{1}-tick_{0}<=0)?1:0)&(turn'={2})",
                       opp, dmg, next);
}

void pokemon_side(std::string& out, int turn, int own, int opp, int next) {
    const std::string on = fmt::format("turn={} & done=0", turn);
    const std::string awake = fmt::format("{} & sleeping_{}=0", on, own);
    auto use = [&](const char* res) { return fmt::format("({0}_{1}'={0}_{1}-1)&", res, own); };

    out += fmt::format("[sleep] {} & sleeps_{} > 0 -> 0.65:{}(sleeping_{}'=2)&{}\n    + 0.35:{}{};\n", awake, own,
                       use("sleeps"), opp, strike(opp, 0, next), use("sleeps"), strike(opp, 0, next));
    out += fmt::format("[tackle] {} & sleeping_{} > 0 -> (sleeping_{}'=sleeping_{}-1)&{};\n", on, own, own, own,
                       strike(opp, 0, next));
    out += fmt::format("[tackle] {} -> 0.475:{}\n    + 0.475:{}\n    + 0.05:{};\n", awake, strike(opp, 9, next),
                       strike(opp, 10, next), strike(opp, 0, next));
    out += fmt::format("[heal] {} & healpots_{} > 0 -> {}(HP_{}'=min(HP_{}+50,100))&{};\n", awake, own, use("healpots"),
                       own, own, strike(opp, 0, next));
    out += fmt::format("[punch] {} & punches_{} > 0 ->", awake, own);
    for (int d : {17, 18, 19, 20}) out += fmt::format(" 0.2125:{}{}\n    +", use("punches"), strike(opp, d, next));
    out += fmt::format(" 0.15:{}{};\n", use("punches"), strike(opp, 0, next));
    out += fmt::format(
        "[poison] {} & poisons_{} > 0 -> 0.75:{}(HP_{}'=max(HP_{}-tick_{},0))&(poisoned_{}'=3)&(done'=(HP_{}-tick_{}<=0)?1:0)&(turn'={})\n"
        "    + 0.25:{}{};\n",
        awake, own, use("poisons"), opp, opp, opp, opp, opp, opp, next, use("poisons"), strike(opp, 0, next));
}

}  // namespace

std::string mabp_source(std::size_t n) {
    if (n == 0) throw InvalidParams("MABP needs at least one agent");
    std::string out = fmt::format(
        "// Turn-based multi-armed bandit, {} agents.\n"
        "// Model: state (HP_1..HP_N, turn, done), actions bandit_1 and bandit_2,\n"
        "//   reward 1 while the agent is alive.\n"
        "// Dynamics: agents start alive and pull once each per episode in turn order;\n"
        "//   bandit_1 is safe, bandit_2 knocks the agent out with probability 0.5; the\n"
        "//   last agent's pull sets done.\n"
        "mdp\n\n",
        n);
    for (std::size_t i = 1; i <= n; ++i) out += fmt::format("HP_{} : [0..1] init 1;\n", i);
    out += fmt::format("turn : [1..{}] init 1;\ndone : [0..1] init 0;\n\n", n);
    for (std::size_t i = 1; i <= n; ++i) {
        std::string pass = i == n ? "(turn'=1)&(done'=1)" : fmt::format("(turn'={})", i + 1);
        out += fmt::format("[bandit_1] turn={} & done=0 -> {};\n", i, pass);
        out += fmt::format("[bandit_2] turn={} & done=0 -> 0.5:{} + 0.5:(HP_{}'=0)&{};\n", i, pass, i, pass);
    }
    out += "\n";
    for (std::size_t i = 1; i <= n; ++i) out += fmt::format("label \"lost_{}\" = HP_{}=0;\n", i, i);
    for (std::size_t i = 1; i <= n; ++i) {
        out += fmt::format("\nrewards \"agent_{}\"\n    HP_{}=1 : 1;\nendrewards\n", i, i);
    }
    return out;
}

std::string tictactoe_source(std::size_t size) {
    if (size != 2 && size != 3) throw InvalidParams("Tic-Tac-Toe board size must be 2 or 3");
    const auto lines = board_lines(size);
    std::string out = fmt::format(
        "// Tic-Tac-Toe on a {0}x{0} board. Cell value 0 is empty, 1 and 2 are the agents' marks.\n"
        "// Model: state (cells, turn, done), one mark action per cell, a 10% chance\n"
        "//   that the mark is not drawn, reward 500 for the winner.\n"
        "// Dynamics: marking an occupied cell only passes the turn; a completed line\n"
        "//   or a full board sets done.\n"
        "mdp\n\n",
        size);
    for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) out += fmt::format("{} : [0..2] init 0;\n", cell(r, c));
    out += "turn : [1..2] init 1;\ndone : [0..1] init 0;\n\n";

    for (int p = 1; p <= 2; ++p) {
        std::vector<std::string> any;
        for (const auto& line : lines) {
            std::vector<std::string> all;
            for (auto [r, c] : line) all.push_back(fmt::format("{}={}", cell(r, c), p));
            any.push_back("(" + join(all, " & ") + ")");
        }
        out += fmt::format("formula won_{} = {};\n", p, join(any, " | "));
    }
    std::vector<std::string> filled;
    for (std::size_t r = 0; r < size; ++r)
        for (std::size_t c = 0; c < size; ++c) filled.push_back(cell(r, c) + "!=0");
    out += fmt::format("formula full = {};\n\n", join(filled, " & "));

    for (int p = 1; p <= 2; ++p) {
        const int other = 3 - p;
        for (std::size_t r = 0; r < size; ++r) {
            for (std::size_t c = 0; c < size; ++c) {
                // Win or full board once (r, c) carries p's mark.
                std::vector<std::string> wins;
                for (const auto& line : lines) {
                    if (std::find(line.begin(), line.end(), std::pair{r, c}) == line.end()) continue;
                    std::vector<std::string> rest;
                    for (auto [rr, cc] : line)
                        if (rr != r || cc != c) rest.push_back(fmt::format("{}={}", cell(rr, cc), p));
                    wins.push_back("(" + join(rest, " & ") + ")");
                }
                std::vector<std::string> others;
                for (std::size_t rr = 0; rr < size; ++rr)
                    for (std::size_t cc = 0; cc < size; ++cc)
                        if (rr != r || cc != c) others.push_back(cell(rr, cc) + "!=0");
                const std::string x = cell(r, c);
                out += fmt::format(
                    "[mark_{0}{1}] turn={2} & done=0 & {3}=0 -> 0.9:({3}'={2})&(turn'={4})&(done'=({5} | ({6}))?1:0)"
                    " + 0.1:(turn'={4});\n",
                    r, c, p, x, other, join(wins, " | "), join(others, " & "));
                out += fmt::format("[mark_{0}{1}] turn={2} & done=0 & {3}!=0 -> (turn'={4});\n", r, c, p, x, other);
            }
        }
    }
    out += "\nlabel \"won_1\" = won_1;\nlabel \"won_2\" = won_2;\nlabel \"draw\" = full & !won_1 & !won_2;\n";
    for (int p = 1; p <= 2; ++p) out += fmt::format("\nrewards \"agent_{0}\"\n    won_{0} : 500;\nendrewards\n", p);
    return out;
}

std::string coin_collection_source(std::size_t grid) {
    if (grid < 2) throw InvalidParams("coin collection needs a grid of at least 2x2");
    const std::size_t g = grid - 1;
    struct Dir {
        const char* name;
        int dx, dy;
    };
    const Dir dirs[] = {{"up", 0, 1}, {"right", 1, 0}, {"down", 0, -1}, {"left", -1, 0}};
    auto shifted = [&](const char* var, int d) -> std::string {
        if (d > 0) return fmt::format("min({}+1,{})", var, g);
        if (d < 0) return fmt::format("max({}-1,0)", var);
        return var;
    };

    std::string out = fmt::format(
        "// Coin collection, three agents on a {0}x{0} grid.\n"
        "// Model: state (x_i, y_i, hp_i, coin_x, coin_y, done, turn), move and hit\n"
        "//   actions in four directions, hit success 0.4, collision ends the game, reward 1 per\n"
        "//   step alive and 100 for collecting the coin.\n"
        "// Dynamics: agents start in distinct corners with hp 2 and the coin in the\n"
        "//   fourth; up increases y and right increases x; moves stop at the walls; a\n"
        "//   collected coin respawns uniformly over all cells; a knocked-out agent can only pass.\n"
        "mdp\n\n",
        grid);
    const std::pair<std::size_t, std::size_t> start[] = {{0, 0}, {g, 0}, {0, g}};
    for (int i = 1; i <= 3; ++i) {
        out += fmt::format("x_{0} : [0..{1}] init {2};\ny_{0} : [0..{1}] init {3};\nhp_{0} : [0..2] init 2;\n", i, g,
                           start[i - 1].first, start[i - 1].second);
    }
    out += fmt::format("coin_x : [0..{0}] init {0};\ncoin_y : [0..{0}] init {0};\n", g);
    out += "done : [0..1] init 0;\nturn : [1..3] init 1;\n\n";

    for (int i = 1; i <= 3; ++i) {
        for (const Dir& d : dirs) {
            out += fmt::format("formula {}_x_{} = {};\n", d.name, i, shifted(fmt::format("x_{}", i).c_str(), d.dx));
            out += fmt::format("formula {}_y_{} = {};\n", d.name, i, shifted(fmt::format("y_{}", i).c_str(), d.dy));
            std::vector<std::string> occ;
            for (int j = 1; j <= 3; ++j)
                if (j != i) occ.push_back(fmt::format("(x_{0}={1}_x_{2} & y_{0}={1}_y_{2})", j, d.name, i));
            out += fmt::format("formula {}_occupied_{} = {};\n", d.name, i, join(occ, " | "));
            out += fmt::format("formula {0}_coin_{1} = coin_x={0}_x_{1} & coin_y={0}_y_{1};\n", d.name, i);
            for (int j = 1; j <= 3; ++j) {
                if (j == i) continue;
                auto offset = [](int k) { return k > 0 ? std::string("+1") : k < 0 ? std::string("-1") : std::string(); };
                out += fmt::format("formula {0}_target_{1}_{2} = hp_{2}>0 & x_{2}=x_{1}{3} & y_{2}=y_{1}{4};\n", d.name,
                                   i, j, offset(d.dx), offset(d.dy));
            }
        }
    }
    out += "\n";

    for (int i = 1; i <= 3; ++i) {
        const int next = i % 3 + 1;
        const std::string on = fmt::format("turn={} & done=0 & hp_{}>0", i, i);
        for (const Dir& d : dirs) {
            const std::string move = fmt::format("(x_{0}'={1}_x_{0})&(y_{0}'={1}_y_{0})", i, d.name);
            out += fmt::format("[{0}] {1} & {0}_occupied_{2} -> {3}&(done'=1)&(turn'={4});\n", d.name, on, i, move, next);
            out += fmt::format("[{0}] {1} & !{0}_occupied_{2} & {0}_coin_{2} ->", d.name, on, i);
            for (std::size_t cx = 0; cx <= g; ++cx) {
                for (std::size_t cy = 0; cy <= g; ++cy) {
                    out += fmt::format("{}1.0/{}:{}&(coin_x'={})&(coin_y'={})&(turn'={})", cx || cy ? "\n    + " : " ",
                                       grid * grid, move, cx, cy, next);
                }
            }
            out += ";\n";
            out += fmt::format("[{0}] {1} & !{0}_occupied_{2} & !{0}_coin_{2} -> {3}&(turn'={4});\n", d.name, on, i,
                               move, next);
        }
        for (const Dir& d : dirs) {
            std::vector<std::string> none;
            for (int j = 1; j <= 3; ++j) {
                if (j == i) continue;
                out += fmt::format("[hit_{0}] {1} & {0}_target_{2}_{3} -> 0.4:(hp_{3}'=hp_{3}-1)&(turn'={4}) + 0.6:(turn'={4});\n",
                                   d.name, on, i, j, next);
                none.push_back(fmt::format("!{}_target_{}_{}", d.name, i, j));
            }
            out += fmt::format("[hit_{0}] {1} & {2} -> (turn'={3});\n", d.name, on, join(none, " & "), next);
        }
        out += fmt::format("[pass] turn={} & done=0 & hp_{}=0 -> (turn'={});\n\n", i, i, next);
    }

    for (int i = 1; i <= 3; ++i) out += fmt::format("label \"player{0}_ko\" = hp_{0}=0;\n", i);
    out += "label \"collision\" = (x_1=x_2 & y_1=y_2) | (x_1=x_3 & y_1=y_3) | (x_2=x_3 & y_2=y_3);\n";
    for (int i = 1; i <= 3; ++i) {
        out += fmt::format("\nrewards \"agent_{0}\"\n    hp_{0}>0 : 1;\n", i);
        for (const Dir& d : dirs) {
            out += fmt::format("    [{0}] turn={1} & done=0 & hp_{1}>0 & !{0}_occupied_{1} & {0}_coin_{1} : 99;\n", d.name,
                               i);
        }
        out += "endrewards\n";
    }
    return out;
}

std::string pokemon_source() {
    std::string out =
        "// Pokemon battle, one Pokemon per agent. Agent 1 (turn=1) owns the _0 features.\n"
        "// Model: state tuple and variable names, actions sleep, tackle, heal, punch\n"
        "//   and poison, 100 HP, 3 heal pots, 5 punches, 2 sleeps, 2 poisons, damage multiplier\n"
        "//   between 0.85 and 1.0, reward structure.\n"
        "// Dynamics: base damage tackle 10 and punch 20, multiplier drawn uniformly from\n"
        "//   {0.85, 0.90, 0.95, 1.0} and rounded; success rates tackle 0.95, punch 0.85,\n"
        "//   poison 0.75, sleep 0.65, heal 1.0; poison takes 5 HP on each of the attacker's\n"
        "//   next 3 moves; sleep lasts 2 of the victim's moves, which can only tackle and\n"
        "//   instead wakes up a step; heal restores 50 HP up to 100; a failed move still uses\n"
        "//   up its resource.\n"
        "mdp\n\n"
        "const int hp = 100;\n"
        "const int healpots = 3;\n"
        "const int punches = 5;\n"
        "const int sleeps = 2;\n"
        "const int poisons = 2;\n\n"
        "turn : [1..2] init 1;\n"
        "done : [0..1] init 0;\n";
    for (int k = 0; k <= 1; ++k) {
        out += fmt::format(
            "HP_{0} : [0..100] init hp;\n"
            "sleeping_{0} : [0..2] init 0;\n"
            "poisoned_{0} : [0..3] init 0;\n"
            "healpots_{0} : [0..healpots] init healpots;\n"
            "sleeps_{0} : [0..sleeps] init sleeps;\n"
            "poisons_{0} : [0..poisons] init poisons;\n"
            "punches_{0} : [0..punches] init punches;\n",
            k);
    }
    out += "\n";
    for (int k = 0; k <= 1; ++k) {
        out += fmt::format("formula tick_{0} = poisoned_{0}>0 ? 5 : 0;\nformula pdec_{0} = max(poisoned_{0}-1,0);\n", k);
    }
    out += "\n";
    pokemon_side(out, 1, 0, 1, 2);
    out += "\n";
    pokemon_side(out, 2, 1, 0, 1);
    out +=
        "\nlabel \"won_1\" = HP_1=0;\n"
        "label \"won_2\" = HP_0=0;\n"
        "\nrewards \"agent_1\"\n"
        "    true : max(100-HP_1-0.2*(100-HP_0),0);\n"
        "    HP_1=0 : 5000;\n"
        "endrewards\n"
        "\nrewards \"agent_2\"\n"
        "    true : max(100-HP_0-0.2*(100-HP_1),0);\n"
        "    HP_0=0 : 5000;\n"
        "endrewards\n";
    return out;
}

std::vector<std::string> benchmark_names() { return {"mabp", "tictactoe", "pokemon", "cc"}; }

BenchmarkParams parse_params(const std::string& text) {
    BenchmarkParams out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find(',', pos);
        if (end == std::string::npos) end = text.size();
        std::string item = text.substr(pos, end - pos);
        pos = end + 1;
        if (item.empty()) continue;
        auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw InvalidParams(fmt::format("expected key=value, got '{}'", item));
        std::string key = item.substr(0, eq), value = item.substr(eq + 1);
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc() || ptr != value.data() + value.size()) {
            throw InvalidParams(fmt::format("parameter {} needs an integer value, got '{}'", key, value));
        }
        if (!out.emplace(key, v).second) throw InvalidParams(fmt::format("parameter {} given twice", key));
    }
    return out;
}

BenchmarkSpec benchmark(const std::string& name, const BenchmarkParams& params) {
    BenchmarkSpec spec;
    spec.name = name;
    if (name == "mabp") {
        spec.params = resolve(name, kMabpParams, params);
        const auto n = static_cast<std::size_t>(spec.params.at("n_agents"));
        spec.source = mabp_source(n);
        spec.agents = n;
        if (all_defaults(kMabpParams, spec.params)) spec.model_file = "mabp.gcl";
        for (std::size_t i = 1; i <= n; ++i) spec.labels.push_back(fmt::format("lost_{}", i));
        spec.scripted["safe"] = std::vector<ScriptedRules>(n, ScriptedRules{{}, "bandit_1"});
        auto risky = spec.scripted["safe"];
        risky[0].default_action = "bandit_2";
        spec.scripted["risky_first"] = risky;
        spec.default_scripted = "safe";
    } else if (name == "tictactoe") {
        spec.params = resolve(name, kTicTacToeParams, params);
        const auto size = static_cast<std::size_t>(spec.params.at("size"));
        spec.source = tictactoe_source(size);
        spec.agents = 2;
        spec.model_file = size == 3 ? "tictactoe.gcl" : "tictactoe_2x2.gcl";
        spec.labels = {"won_1", "won_2", "draw"};
        if (size == 3) {
            spec.scripted["marking_order"] = {
                {{{"cell_00=0", "mark_00"}, {"cell_01=0", "mark_01"}, {"cell_20=0", "mark_20"}}, "mark_21"},
                {{{"cell_10=0", "mark_10"}, {"cell_12=0", "mark_12"}}, "mark_11"}};
        } else {
            spec.scripted["marking_order"] = {{{{"cell_00=0", "mark_00"}}, "mark_01"},
                                              {{{"cell_11=0", "mark_11"}}, "mark_10"}};
        }
        spec.default_scripted = "marking_order";
    } else if (name == "pokemon") {
        spec.params = resolve(name, kPokemonParams, params);
        spec.source = pokemon_source();
        for (const auto& r : kPokemonParams) spec.overrides[r.name] = std::to_string(spec.params.at(r.name));
        spec.agents = 2;
        spec.model_file = "pokemon.gcl";
        spec.labels = {"won_1", "won_2"};
        spec.scripted["greedy"] = {
            {{{"punches_0>0", "punch"}}, "tackle"},
            {{{"healpots_1>0 & HP_1<30", "heal"}, {"poisons_1>0 & poisoned_0=0", "poison"},
              {"sleeps_1>0 & sleeping_0=0", "sleep"}},
             "tackle"}};
        spec.default_scripted = "greedy";
    } else if (name == "cc") {
        spec.params = resolve(name, kCoinParams, params);
        const auto grid = spec.params.at("grid");
        spec.source = coin_collection_source(static_cast<std::size_t>(grid));
        spec.agents = 3;
        if (all_defaults(kCoinParams, spec.params)) spec.model_file = "coin_collection.gcl";
        spec.labels = {"player1_ko", "player2_ko", "player3_ko", "collision"};
        // Agent 1 walks up to agent 2 and fights it; agent 3 walks along the far
        // wall and down into agent 2's cell.
        spec.scripted["chase"] = {{{{fmt::format("x_1<{}", grid - 2), "right"}}, "hit_right"},
                                  {{}, "hit_left"},
                                  {{{fmt::format("x_3<{}", grid - 1), "right"}}, "down"}};
        spec.default_scripted = "chase";
    } else {
        throw UnknownBenchmark(fmt::format("unknown benchmark '{}' (known: {})", name, join(benchmark_names(), ", ")));
    }
    return spec;
}

GuardedProgram instantiate(const BenchmarkSpec& spec) { return parse_program(spec.source, spec.overrides); }

GuardedProgram instantiate(const std::string& name, const BenchmarkParams& params) {
    return instantiate(benchmark(name, params));
}

std::vector<AgentPolicy> scripted_policies(const BenchmarkSpec& spec, const GuardedProgram& program,
                                           const std::string& variant) {
    const std::string& key = variant.empty() ? spec.default_scripted : variant;
    auto it = spec.scripted.find(key);
    if (it == spec.scripted.end()) {
        throw ConfigError(fmt::format("{} has no scripted policy '{}'", spec.name, key));
    }
    std::vector<AgentPolicy> out;
    for (std::size_t i = 0; i < it->second.size(); ++i) {
        const ScriptedRules& r = it->second[i];
        out.push_back(make_scripted_policy(program.schema(), program.actions(), fmt::format("{}_{}", key, i + 1),
                                           r.rules, r.default_action));
    }
    return out;
}

}  // namespace tmc
