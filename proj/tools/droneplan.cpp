// droneplan: command-line front end. Every subcommand writes its files into
// --out together with manifest.json, which `droneplan rerun` replays.

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <thread>

#include "droneplan/assignment.hpp"
#include "droneplan/coalition.hpp"
#include "droneplan/costshare.hpp"
#include "droneplan/dynamic.hpp"
#include "droneplan/ingest.hpp"
#include "droneplan/sim.hpp"

namespace fs = std::filesystem;
using namespace droneplan;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kInput = 2, kCompute = 3, kIo = 4 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Output helpers

std::string csv_field(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string> header) { row(std::vector<std::string>(header)); }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) text_ += (i ? "," : "") + csv_field(fields[i]);
    text_ += "\n";
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

std::string num(double v, int digits = 6) { return fmt::format("{:.{}f}", v, digits); }

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Run context shared by subcommands

struct Context {
  std::vector<std::string> argv;  // arguments after the program name
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::uint64_t max_nodes = 0;
  std::string out;
  CLI::App* command = nullptr;
  std::function<int()> action;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, fnv1a hex
  std::vector<std::string> outputs;

  SolveOptions solve() const { return {max_nodes}; }

  std::string read_input(const std::string& path) {
    auto text = slurp(path);
    inputs.emplace_back(path, fmt::format("{:016x}", fnv1a(text)));
    return text;
  }

  void write(const std::string& name, const std::string& content) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create " + out + ": " + ec.message());
    const auto path = fs::path(out) / name;
    std::ofstream f(path, std::ios::binary);
    f << content;
    if (!f.flush()) throw IoError("cannot write " + path.string());
    outputs.push_back(name);
    spdlog::debug("wrote {}", path.string());
  }

  ScenarioDocument load(const std::string& path) {
    auto doc = read_scenario(read_input(path));
    const auto issues = validate_scenario(doc.scenario);
    for (const auto& i : issues) spdlog::error("{}: {}", i.path, i.message);
    if (!issues.empty()) throw InputError(path + ": scenario failed validation");
    return doc;
  }
};

std::vector<Rational> parse_misbehavior(const std::string& text, const DeliveryScenario& s) {
  std::vector<Rational> rates(s.shippers().size(), 0);
  if (text.empty()) return rates;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("misbehavior entry '" + item + "' needs id=rate");
    const auto p = s.find_shipper(item.substr(0, eq));
    if (!p) throw std::invalid_argument("unknown shipper '" + item.substr(0, eq) + "'");
    rates[*p] = parse_text(item.substr(eq + 1));
    if (rates[*p] < 0 || rates[*p] > 1) throw std::invalid_argument("misbehavior rate must lie in [0, 1]");
  }
  return rates;
}

std::vector<Rational> parse_list(const std::string& text) {
  std::vector<Rational> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) out.push_back(parse_text(item));
  if (out.empty()) throw std::invalid_argument("empty value list");
  return out;
}

CoalitionStructure parse_full_structure(const std::string& text, const std::vector<std::string>& ids) {
  auto s = parse_structure(text, ids);
  if (!is_partition(s, ids.size())) {
    throw std::invalid_argument("structure '" + text + "' must place every shipper in exactly one coalition");
  }
  return s;
}

/// "Phi<k>" in reporting order, for up to 8 shippers; the structure text beyond.
class StructureIds {
 public:
  explicit StructureIds(std::vector<std::string> ids) : ids_(std::move(ids)) {
    if (ids_.size() <= 8) all_ = enumerate_structures(ids_.size());
  }
  std::string id(const CoalitionStructure& s) const {
    for (std::size_t k = 0; k < all_.size(); ++k) {
      if (all_[k] == s) return "Phi" + std::to_string(k + 1);
    }
    return format_structure(s, ids_);
  }
  std::string text(const CoalitionStructure& s) const { return format_structure(s, ids_); }

 private:
  std::vector<std::string> ids_;
  std::vector<CoalitionStructure> all_;
};

Json structure_json(const CoalitionStructure& s, const StructureIds& names) {
  return {{"id", names.id(s)}, {"structure", names.text(s)}};
}

DeliveryScenario with_parameters(const DeliveryScenario& s, const Rational& breakdown, const Rational& penalty) {
  auto drones = s.drones();
  for (auto& d : drones) d.breakdown_prob = breakdown;
  auto costs = s.costs();
  costs.penalty_cost = penalty;
  return DeliveryScenario(s.shippers(), s.customers(), drones, costs);
}

// ---------------------------------------------------------------------------
// Subcommands

void add_validate(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("validate", "Check a scenario file and report every invariant violation");
  auto path = std::make_shared<std::string>();
  cmd->add_option("scenario", *path, "Scenario JSON")->required();
  cmd->callback([&ctx, cmd, path] {
    ctx.command = cmd;
    ctx.action = [&ctx, path] {
      const auto doc = read_scenario(ctx.read_input(*path));
      const auto issues = validate_scenario(doc.scenario);
      Csv csv{"path", "message"};
      for (const auto& i : issues) {
        csv.row({i.path, i.message});
        spdlog::error("{}: {}", i.path, i.message);
      }
      ctx.write("validation.csv", csv.text());
      fmt::print("{}: {} shippers, {} customers, {} drones, {} issue(s)\n", *path,
                 doc.scenario.shippers().size(), doc.scenario.customers().size(),
                 doc.scenario.drones().size(), issues.size());
      return issues.empty() ? kOk : kInput;
    };
  });
}

void add_solomon(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("solomon", "Synthesize a four-depot scenario from a Solomon benchmark file");
  struct Args {
    std::string path;
    std::size_t customers = 60;
    std::vector<int> depots;
    double scale = 0.1;
    std::string breakdown = "0.025";
    std::string transfer = "30", outsource = "16", penalty = "16", belief = "0.9", initial = "100";
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("file", a->path, "Solomon-format text file")->required();
  cmd->add_option("--customers", a->customers, "Number of customers taken in file order")->capture_default_str();
  cmd->add_option("--depots", a->depots, "Four row ids used as depots (default: nearest to quadrant centroids)")
      ->delimiter(',')
      ->expected(4);
  cmd->add_option("--scale", a->scale, "Kilometres per Solomon coordinate unit")->capture_default_str();
  cmd->add_option("--breakdown", a->breakdown, "Drone breakdown probability")->capture_default_str();
  cmd->add_option("--initial-cost", a->initial, "Drone start-up cost")->capture_default_str();
  cmd->add_option("--transfer-cost", a->transfer)->capture_default_str();
  cmd->add_option("--outsource-cost", a->outsource)->capture_default_str();
  cmd->add_option("--penalty-cost", a->penalty)->capture_default_str();
  cmd->add_option("--belief", a->belief, "Initial belief for every ordered pair")->capture_default_str();
  cmd->callback([&ctx, cmd, a] {
    ctx.command = cmd;
    ctx.action = [&ctx, a] {
      const auto inst = parse_solomon(ctx.read_input(a->path));
      SynthesisConfig cfg;
      cfg.customer_count = a->customers;
      cfg.depot_rows = a->depots;
      cfg.coordinate_scale = a->scale;
      cfg.breakdown_prob = parse_text(a->breakdown);
      cfg.initial_cost = parse_text(a->initial);
      cfg.transfer_cost = parse_text(a->transfer);
      cfg.outsource_cost = parse_text(a->outsource);
      cfg.penalty_cost = parse_text(a->penalty);
      cfg.belief = parse_text(a->belief);
      const auto doc = synthesize_scenario(inst, cfg);
      const auto issues = validate_scenario(doc.scenario);
      for (const auto& i : issues) spdlog::error("{}: {}", i.path, i.message);
      if (!issues.empty()) throw InputError("synthesized scenario failed validation");
      ctx.write("scenario.json", write_scenario(doc));
      return kOk;
    };
  });
}

void add_assign(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("assign", "Solve the package assignment of one coalition");
  struct Args {
    std::string path, coalition, mode = "stochastic";
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("scenario", a->path)->required();
  cmd->add_option("--coalition", a->coalition, "Members, e.g. p1,p3 (default: every shipper)");
  cmd->add_option("--mode", a->mode, "deterministic or stochastic")->capture_default_str();
  cmd->callback([&ctx, cmd, a] {
    ctx.command = cmd;
    ctx.action = [&ctx, a] {
      const auto doc = ctx.load(a->path);
      const auto& s = doc.scenario;
      const auto ids = s.shipper_ids();
      const auto coalition = a->coalition.empty() ? Coalition::all(ids.size()) : parse_coalition(a->coalition, ids);
      const auto mode = parse_plan_mode(a->mode);
      SolveStats stats;
      const auto sol = solve_assignment(s, coalition, mode, ctx.solve(), &stats);
      spdlog::info("solved {} in {} nodes over {} depot configurations", format_coalition(coalition, ids),
                   stats.nodes, stats.configurations);
      ctx.write("solution.json", solution_to_json(s, sol).dump(2) + "\n");
      const auto b = evaluate_objective(s, coalition, sol, mode);
      Csv csv{"component", "cost"};
      csv.row({"initial", format_decimal(b.initial)});
      csv.row({"routing", format_decimal(b.routing)});
      csv.row({"transfer", format_decimal(b.transfer)});
      csv.row({"outsource", format_decimal(b.outsource)});
      csv.row({"expected_penalty", format_decimal(b.expected_penalty)});
      csv.row({"total", format_decimal(b.total())});
      ctx.write("breakdown.csv", csv.text());
      fmt::print("{} {}: objective {}\n", format_coalition(coalition, ids), to_string(mode),
                 format_decimal(sol.objective));
      return kOk;
    };
  });
}

void add_shapley(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("shapley", "Split each coalition's cost by Shapley value");
  struct Args {
    std::string path, structure, mode = "stochastic";
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("scenario", a->path)->required();
  cmd->add_option("--structure", a->structure, "Coalition structure, e.g. p1,p2|p3,p4 (default: grand coalition)");
  cmd->add_option("--mode", a->mode)->capture_default_str();
  cmd->callback([&ctx, cmd, a] {
    ctx.command = cmd;
    ctx.action = [&ctx, a] {
      const auto doc = ctx.load(a->path);
      const auto ids = doc.scenario.shipper_ids();
      const auto structure = a->structure.empty()
                                 ? CoalitionStructure::from_blocks({Coalition::all(ids.size())})
                                 : parse_full_structure(a->structure, ids);
      CharacteristicCache cache(doc.scenario, parse_plan_mode(a->mode), ctx.solve());
      std::vector<Coalition> all;
      for (auto block : structure.blocks) {
        for (auto sub : subsets(block)) all.push_back(sub);
      }
      cache.precompute(all, ctx.jobs);
      const StructureIds names(ids);
      Csv shares{"structure_id", "shipper", "share"};
      Csv values{"coalition", "cost"};
      for (auto block : structure.blocks) {
        const auto alloc = shapley(cache, doc.scenario, block);
        for (const auto& [p, share] : alloc.shares) shares.row({names.id(structure), ids[p], format_decimal(share)});
        for (auto sub : subsets(block)) {
          values.row({format_coalition(sub, ids), format_decimal(characteristic_cost(cache, doc.scenario, sub))});
        }
      }
      ctx.write("allocations.csv", shares.text());
      ctx.write("characteristic.csv", values.text());
      return kOk;
    };
  });
}

struct PlanningArgs {
  std::string path, mode = "stochastic", belief;
};

void add_planning_options(CLI::App* cmd, PlanningArgs& a) {
  cmd->add_option("scenario", a.path)->required();
  cmd->add_option("--mode", a.mode, "Cost model behind the characteristic function")->capture_default_str();
  cmd->add_option("--belief", a.belief, "Override every pairwise belief with this value");
}

BeliefMatrix planning_beliefs(const ScenarioDocument& doc, const std::string& override_value) {
  if (override_value.empty()) return doc.beliefs;
  return BeliefMatrix(doc.scenario.shippers().size(), parse_text(override_value));
}

void add_coalition(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("coalition", "Run merge-and-split coalition formation");
  struct Args : PlanningArgs {
    std::string initial;
    std::size_t max_switches = 0;
  };
  auto a = std::make_shared<Args>();
  add_planning_options(cmd, *a);
  cmd->add_option("--initial", a->initial, "Starting structure (default: all singletons)");
  cmd->add_option("--max-switches", a->max_switches, "Switch cap (0: n * Bell(n))")->capture_default_str();
  cmd->callback([&ctx, cmd, a] {
    ctx.command = cmd;
    ctx.action = [&ctx, a] {
      const auto doc = ctx.load(a->path);
      const auto ids = doc.scenario.shipper_ids();
      CharacteristicCache cache(doc.scenario, parse_plan_mode(a->mode), ctx.solve());
      PayoffModel payoffs(cache, planning_beliefs(doc, a->belief), ctx.jobs);
      std::optional<CoalitionStructure> initial;
      if (!a->initial.empty()) initial = parse_full_structure(a->initial, ids);
      const auto result = merge_split(payoffs, initial, {a->max_switches});
      const StructureIds names(ids);

      Csv trace{"iteration", "from", "to", "to_id", "mover", "before", "after"};
      for (const auto& step : result.trace) {
        trace.row({std::to_string(step.iteration), names.text(step.from), names.text(step.to), names.id(step.to),
                   ids[step.mover], format_preference(step.before), format_preference(step.after)});
      }
      ctx.write("trace.csv", trace.text());

      std::vector<CoalitionStructure> visited{initial.value_or(CoalitionStructure::singletons(ids.size()))};
      for (const auto& step : result.trace) {
        if (std::find(visited.begin(), visited.end(), step.to) == visited.end()) visited.push_back(step.to);
      }
      Csv alloc{"structure_id", "structure", "shipper", "share", "expected_payoff"};
      for (const auto& s : visited) {
        for (std::size_t p = 0; p < ids.size(); ++p) {
          const auto block = s.block_of(p);
          alloc.row({names.id(s), names.text(s), ids[p], format_decimal(payoffs.allocation(block).shares.at(p)),
                     format_decimal(payoffs.payoff(p, block))});
        }
      }
      ctx.write("allocations.csv", alloc.text());

      const bool stable = improving_deviations(payoffs, result.structure, &result.visited).empty();
      Json summary = structure_json(result.structure, names);
      summary["switches"] = result.trace.size();
      summary["capped"] = result.capped;
      summary["stable"] = stable;
      ctx.write("summary.json", summary.dump(2) + "\n");
      fmt::print("final structure {} ({}) after {} switches\n", names.text(result.structure),
                 names.id(result.structure), result.trace.size());
      return kOk;
    };
  });
}

void add_markov(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("markov", "Stationary distribution of the structure-transition chain");
  struct Args : PlanningArgs {
    std::string alpha = "0.5", epsilon = "0.1";
  };
  auto a = std::make_shared<Args>();
  add_planning_options(cmd, *a);
  cmd->add_option("--alpha", a->alpha, "Probability that a shipper attempts a move")->capture_default_str();
  cmd->add_option("--epsilon", a->epsilon, "Weight of preferred transitions")->capture_default_str();
  cmd->callback([&ctx, cmd, a] {
    ctx.command = cmd;
    ctx.action = [&ctx, a] {
      const auto doc = ctx.load(a->path);
      const auto ids = doc.scenario.shipper_ids();
      CharacteristicCache cache(doc.scenario, parse_plan_mode(a->mode), ctx.solve());
      PayoffModel payoffs(cache, planning_beliefs(doc, a->belief), ctx.jobs);
      payoffs.prepare({Coalition::all(ids.size())});
      const auto model = transition_matrix(payoffs, parse_text(a->alpha), parse_text(a->epsilon));
      const auto stationary = stationary_distribution(model);
      const StructureIds names(ids);

      Csv pi{"structure_id", "structure", "pi"};
      std::size_t best = 0;
      for (std::size_t k = 0; k < model.states.size(); ++k) {
        pi.row({names.id(model.states[k]), names.text(model.states[k]), num(stationary.pi[k], 12)});
        if (stationary.pi[k] > stationary.pi[best]) best = k;
      }
      ctx.write("pi.csv", pi.text());
      Csv q{"from_id", "to_id", "probability", "exact"};
      for (std::size_t r = 0; r < model.rows.size(); ++r) {
        for (const auto& [c, v] : model.rows[r]) {
          q.row({names.id(model.states[r]), names.id(model.states[c]), num(to_double(v), 12), to_text(v)});
        }
      }
      ctx.write("transitions.csv", q.text());
      Json summary{{"argmax", structure_json(model.states[best], names)},
                   {"states", model.states.size()},
                   {"residual_below_1e-10", stationary.residual <= 1e-10}};
      ctx.write("summary.json", summary.dump(2) + "\n");
      fmt::print("argmax pi: {} ({}) with {}\n", names.text(model.states[best]), names.id(model.states[best]),
                 num(stationary.pi[best], 6));
      return kOk;
    };
  });
}

void add_dynamic(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("dynamic", "Repeated coalition formation with belief updates");
  struct Args {
    std::string path, misbehavior, error_prob = "0.05", w1 = "0.5", w2 = "0.5", belief;
    std::size_t iterations = 12, settle = 2;
    double tolerance = 1e-3;
    std::uint64_t runs = 1;
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("scenario", a->path)->required();
  cmd->add_option("--misbehavior", a->misbehavior, "Ground-truth drop rates, e.g. p3=0.25,p4=0.25");
  cmd->add_option("--error-prob", a->error_prob, "Delivery error probability of an honest partner")
      ->capture_default_str();
  cmd->add_option("--w1", a->w1, "Weight of the previous belief")->capture_default_str();
  cmd->add_option("--w2", a->w2, "Weight of the new observation")->capture_default_str();
  cmd->add_option("--belief", a->belief, "Initial belief override for every pair");
  cmd->add_option("--iterations", a->iterations, "Maximum iterations")->capture_default_str();
  cmd->add_option("--tolerance", a->tolerance, "Largest belief change counted as settled")->capture_default_str();
  cmd->add_option("--settle", a->settle, "Consecutive settled iterations for convergence")->capture_default_str();
  cmd->add_option("--runs", a->runs, "Simulated runs per iteration")->capture_default_str();
  cmd->callback([&ctx, cmd, a] {
    ctx.command = cmd;
    ctx.action = [&ctx, a] {
      const auto doc = ctx.load(a->path);
      const auto& s = doc.scenario;
      const auto ids = s.shipper_ids();
      DynamicConfig cfg;
      cfg.initial = planning_beliefs(doc, a->belief);
      cfg.misbehavior = parse_misbehavior(a->misbehavior, s);
      cfg.error_prob = parse_text(a->error_prob);
      cfg.w1 = parse_text(a->w1);
      cfg.w2 = parse_text(a->w2);
      cfg.max_iters = a->iterations;
      cfg.tolerance = a->tolerance;
      cfg.settle = a->settle;
      cfg.seed = ctx.seed;
      cfg.runs_per_iteration = a->runs;
      cfg.jobs = ctx.jobs;
      const auto result = run_dynamic(s, cfg, ctx.solve());
      const StructureIds names(ids);

      Csv beliefs{"iteration", "from", "to", "theta", "theta_ok", "lambda"};
      Csv timeline{"iteration", "structure_id", "structure", "shipper", "expected_cost", "realized_cost"};
      for (const auto& it : result.iterations) {
        for (std::size_t p = 0; p < ids.size(); ++p) {
          for (std::size_t q = 0; q < ids.size(); ++q) {
            if (p == q) continue;
            std::int64_t theta = 0, ok = 0;
            for (const auto& o : it.observations) {
              if (o.p == p && o.q == q) {
                theta = o.theta;
                ok = o.theta_ok;
              }
            }
            beliefs.row({std::to_string(it.iteration), ids[p], ids[q], std::to_string(theta), std::to_string(ok),
                         format_decimal(it.updated(p, q), 6)});
          }
          timeline.row({std::to_string(it.iteration), names.id(it.structure), names.text(it.structure), ids[p],
                        format_decimal(it.expected[p]), num(it.realized[p], 4)});
        }
      }
      ctx.write("beliefs.csv", beliefs.text());
      ctx.write("timeline.csv", timeline.text());
      Json summary{{"iterations", result.iterations.size()}, {"converged", result.converged}};
      if (!result.iterations.empty()) summary["final"] = structure_json(result.iterations.back().structure, names);
      ctx.write("summary.json", summary.dump(2) + "\n");
      fmt::print("{} iteration(s), {}\n", result.iterations.size(), result.converged ? "converged" : "not converged");
      return kOk;
    };
  });
}

Json events_json(const std::vector<SimEvent>& events) {
  Json out = Json::array();
  for (const auto& e : events) {
    out.push_back({{"run", e.run},
                   {"kind", e.kind},
                   {"customer", e.customer},
                   {"owner", e.owner},
                   {"drone", e.drone},
                   {"cost", num(e.cost, 2)}});
  }
  return out;
}

void add_simulate(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("simulate", "Monte Carlo execution of a structure's plans");
  struct Args {
    std::string path, structure, mode = "stochastic", misbehavior;
    std::uint64_t runs = 1000;
    bool events = false;
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("scenario", a->path)->required();
  cmd->add_option("--structure", a->structure, "Coalition structure (default: all singletons)");
  cmd->add_option("--mode", a->mode, "Objective used to plan each coalition")->capture_default_str();
  cmd->add_option("--misbehavior", a->misbehavior, "Drop rates of receiving shippers, e.g. p3=0.25");
  cmd->add_option("--runs", a->runs)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_flag("--events", a->events, "Also write the per-run event log as events.json");
  cmd->callback([&ctx, cmd, a] {
    ctx.command = cmd;
    ctx.action = [&ctx, a] {
      const auto doc = ctx.load(a->path);
      const auto& s = doc.scenario;
      const auto ids = s.shipper_ids();
      const auto structure = a->structure.empty() ? CoalitionStructure::singletons(ids.size())
                                                  : parse_full_structure(a->structure, ids);
      CharacteristicCache cache(s, parse_plan_mode(a->mode), ctx.solve());
      std::vector<Coalition> all;
      for (auto block : structure.blocks) {
        for (auto sub : subsets(block)) all.push_back(sub);
      }
      cache.precompute(all, ctx.jobs);
      const auto plan = make_plan(cache, structure);
      SimConfig cfg;
      cfg.runs = a->runs;
      cfg.seed = ctx.seed;
      cfg.misbehavior = parse_misbehavior(a->misbehavior, s);
      cfg.jobs = ctx.jobs;
      cfg.keep_events = a->events;
      const auto report = simulate_plan(s, plan, cfg);

      Csv shippers{"framework", "shipper", "mean_cost", "std_error"};
      const std::string label = a->mode == "deterministic" || a->mode == "ddd" ? "deterministic" : "stochastic";
      for (std::size_t p = 0; p < ids.size(); ++p) {
        shippers.row({label, ids[p], num(report.shipper_mean[p], 4), num(report.shipper_stderr[p], 4)});
      }
      ctx.write("sim.csv", shippers.text());
      Csv blocks{"coalition", "planned_cost", "mean_cost"};
      for (std::size_t b = 0; b < structure.blocks.size(); ++b) {
        blocks.row({format_coalition(structure.blocks[b], ids), format_decimal(plan.solutions[b].objective),
                    num(report.block_mean[b], 4)});
      }
      ctx.write("blocks.csv", blocks.text());
      const StructureIds names(ids);
      Json summary = structure_json(structure, names);
      summary["runs"] = a->runs;
      summary["total_mean"] = num(report.total_mean, 4);
      summary["total_stderr"] = num(report.total_stderr, 4);
      summary["penalty_mean"] = num(report.penalty_mean, 4);
      summary["breakdown_penalty_mean"] = num(report.breakdown_penalty_mean, 4);
      summary["assigned"] = report.assigned;
      summary["delivered"] = report.delivered;
      ctx.write("summary.json", summary.dump(2) + "\n");
      if (a->events) ctx.write("events.json", events_json(report.events).dump(1) + "\n");
      return kOk;
    };
  });
}

void add_compare(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("compare", "Simulate DDD, SDD, CoDDD, CoSDD and BCoSDD side by side");
  struct Args {
    std::string path, misbehavior, belief;
    std::uint64_t runs = 1000;
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("scenario", a->path)->required();
  cmd->add_option("--misbehavior", a->misbehavior, "Drop rates of receiving shippers, e.g. p3=0.25");
  cmd->add_option("--belief", a->belief, "Override every pairwise belief used by BCoSDD");
  cmd->add_option("--runs", a->runs)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->callback([&ctx, cmd, a] {
    ctx.command = cmd;
    ctx.action = [&ctx, a] {
      const auto doc = ctx.load(a->path);
      const auto& s = doc.scenario;
      const auto ids = s.shipper_ids();
      SimConfig cfg;
      cfg.runs = a->runs;
      cfg.seed = ctx.seed;
      cfg.misbehavior = parse_misbehavior(a->misbehavior, s);
      cfg.jobs = ctx.jobs;
      const auto results = compare_frameworks(s, planning_beliefs(doc, a->belief), cfg, ctx.solve());
      const StructureIds names(ids);
      Csv table{"framework", "shipper", "mean_cost", "std_error"};
      Csv structures{"framework", "structure_id", "structure", "total_mean", "total_stderr"};
      for (const auto& r : results) {
        for (std::size_t p = 0; p < ids.size(); ++p) {
          table.row({r.name, ids[p], num(r.report.shipper_mean[p], 4), num(r.report.shipper_stderr[p], 4)});
        }
        structures.row({r.name, names.id(r.structure), names.text(r.structure), num(r.report.total_mean, 4),
                        num(r.report.total_stderr, 4)});
      }
      ctx.write("compare.csv", table.text());
      ctx.write("structures.csv", structures.text());
      return kOk;
    };
  });
}

void add_sweep(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("sweep", "Singleton DDD vs SDD costs over breakdown and penalty grids");
  struct Args {
    std::string path, breakdown = "0.01,0.025,0.05,0.1,0.2", penalty = "16";
    std::uint64_t runs = 1000;
  };
  auto a = std::make_shared<Args>();
  cmd->add_option("scenario", a->path)->required();
  cmd->add_option("--breakdown", a->breakdown, "Comma-separated breakdown probabilities")->capture_default_str();
  cmd->add_option("--penalty", a->penalty, "Comma-separated penalty costs")->capture_default_str();
  cmd->add_option("--runs", a->runs)->capture_default_str()->check(CLI::PositiveNumber);
  cmd->callback([&ctx, cmd, a] {
    ctx.command = cmd;
    ctx.action = [&ctx, a] {
      const auto doc = ctx.load(a->path);
      const auto ids = doc.scenario.shipper_ids();
      const auto singletons = CoalitionStructure::singletons(ids.size());
      Csv csv{"breakdown", "penalty", "framework", "shipper", "planned_cost", "expected_cost", "mean_cost", "std_error"};
      for (const auto& pb : parse_list(a->breakdown)) {
        for (const auto& pen : parse_list(a->penalty)) {
          const auto s = with_parameters(doc.scenario, pb, pen);
          for (auto mode : {PlanMode::deterministic, PlanMode::stochastic}) {
            CharacteristicCache cache(s, mode, ctx.solve());
            cache.precompute(singletons.blocks, ctx.jobs);
            const auto plan = make_plan(cache, singletons);
            SimConfig cfg;
            cfg.runs = a->runs;
            cfg.seed = ctx.seed;
            cfg.jobs = ctx.jobs;
            const auto report = simulate_plan(s, plan, cfg);
            for (std::size_t p = 0; p < ids.size(); ++p) {
              const auto& sol = plan.solutions[p];
              const auto expected = evaluate_objective(s, sol.coalition, sol, PlanMode::stochastic).total();
              csv.row({to_text(pb), to_text(pen), mode == PlanMode::deterministic ? "DDD" : "SDD", ids[p],
                       format_decimal(sol.objective), format_decimal(expected), num(report.shipper_mean[p], 4),
                       num(report.shipper_stderr[p], 4)});
            }
          }
          spdlog::info("sweep point breakdown={} penalty={} done", to_text(pb), to_text(pen));
        }
      }
      ctx.write("sweep.csv", csv.text());
      return kOk;
    };
  });
}

int run_cli(std::vector<std::string> args);

void add_rerun(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("rerun", "Replay the command recorded in a manifest into --out");
  auto path = std::make_shared<std::string>();
  cmd->add_option("manifest", *path, "manifest.json of an earlier run")->required();
  cmd->callback([&ctx, cmd, path] {
    ctx.command = cmd;
    ctx.action = [&ctx, path] {
      Json manifest;
      try {
        manifest = Json::parse(slurp(*path));
      } catch (const Json::exception& e) {
        throw InputError(*path + ": " + e.what());
      }
      if (!manifest.contains("argv") || !manifest["argv"].is_array()) throw InputError(*path + ": no argv recorded");
      std::vector<std::string> args;
      const auto recorded = manifest["argv"].get<std::vector<std::string>>();
      for (std::size_t i = 0; i < recorded.size(); ++i) {
        if (recorded[i] == "-o" || recorded[i] == "--out") {
          ++i;
          continue;
        }
        if (recorded[i].rfind("--out=", 0) == 0) continue;
        args.push_back(recorded[i]);
      }
      if (!args.empty() && args.front() == "rerun") throw InputError("refusing to replay a rerun manifest");
      const bool has_seed = std::any_of(args.begin(), args.end(),
                                        [](const std::string& s) { return s.rfind("--seed", 0) == 0; });
      if (!has_seed && manifest.contains("seed")) {
        args.insert(args.end(), {"--seed", std::to_string(manifest["seed"].get<std::uint64_t>())});
      }
      args.insert(args.end(), {"--out", ctx.out});
      ctx.out.clear();  // the replayed command writes its own manifest
      return run_cli(args);
    };
  });
}

Json parameters(const CLI::App* cmd) {
  Json out = Json::object();
  for (const auto* opt : cmd->get_options()) {
    if (opt->get_name().empty() || opt->get_name() == "--help") continue;
    const auto& results = opt->results();
    if (!results.empty()) {
      std::string joined;
      for (const auto& r : results) joined += (joined.empty() ? "" : ",") + r;
      out[opt->get_name()] = opt->get_type_size() == 0 ? "true" : joined;
    } else if (!opt->get_default_str().empty()) {
      out[opt->get_name()] = opt->get_default_str();
    }
  }
  return out;
}

int run_cli(std::vector<std::string> args) {
  Context ctx;
  ctx.argv = args;
  ctx.jobs = std::max(1U, std::thread::hardware_concurrency());

  CLI::App app{"Cooperative drone delivery planning"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", ctx.seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--jobs", ctx.jobs, "Concurrent solves and simulation runs")->check(CLI::PositiveNumber);
  app.add_option("--max-nodes", ctx.max_nodes, "Branch-and-bound node budget per solve (0: unlimited)");
  app.add_option("-o,--out", ctx.out, "Output directory")->required();

  add_validate(app, ctx);
  add_solomon(app, ctx);
  add_assign(app, ctx);
  add_shapley(app, ctx);
  add_coalition(app, ctx);
  add_markov(app, ctx);
  add_dynamic(app, ctx);
  add_simulate(app, ctx);
  add_compare(app, ctx);
  add_sweep(app, ctx);
  add_rerun(app, ctx);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  const auto start = std::chrono::steady_clock::now();
  int code = kOk;
  try {
    code = ctx.action();
  } catch (const IoError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const InputError& e) {
    spdlog::error("{}", e.what());
    return kInput;
  } catch (const droneplan::ParseError& e) {
    spdlog::error("{}", e.what());
    return kInput;
  } catch (const std::invalid_argument& e) {
    spdlog::error("{}", e.what());
    return kInput;
  } catch (const std::out_of_range& e) {
    spdlog::error("{}", e.what());
    return kInput;
  } catch (const SolverError& e) {
    spdlog::error("{}", e.what());
    return kCompute;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kCompute;
  }
  if (ctx.out.empty()) return code;  // rerun: the replayed command wrote the bundle

  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Json manifest;
  manifest["tool"] = "droneplan";
  manifest["version"] = kVersion;
  manifest["subcommand"] = ctx.command->get_name();
  manifest["argv"] = ctx.argv;
  Json inputs = Json::array();
  for (const auto& [path, hash] : ctx.inputs) inputs.push_back({{"path", path}, {"fnv1a64", hash}});
  manifest["inputs"] = inputs;
  manifest["parameters"] = parameters(ctx.command);
  manifest["seed"] = ctx.seed;
  manifest["jobs"] = ctx.jobs;
  manifest["outputs"] = ctx.outputs;
  manifest["exit_code"] = code;
  manifest["duration_seconds"] = elapsed;
  try {
    ctx.write("manifest.json", manifest.dump(2) + "\n");
  } catch (const IoError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  }
  return code;
}

void configure_logging() {
  auto logger = spdlog::stderr_logger_st("droneplan");
  logger->set_pattern("%l: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("DRONEPLAN_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  return run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
