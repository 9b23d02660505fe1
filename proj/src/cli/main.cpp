#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tml/admissibility.hpp"
#include "tml/derivability.hpp"
#include "tml/formula.hpp"
#include "tml/frame.hpp"
#include "tml/frame_map.hpp"
#include "tml/logic.hpp"
#include "tml/oracle.hpp"
#include "tml/reductions.hpp"
#include "tml/translations.hpp"
#include "tml/universal.hpp"

using nlohmann::json;
using namespace tml;

namespace {

// Exit codes: 0 positive verdict, 1 negative verdict, 2 usage/input error,
// 3 budget exhausted or verdict unknown at the configured bounds.
constexpr int kYes = 0, kNo = 1, kUsage = 2, kUnknown = 3;

void emit(bool as_json, const json& j, const std::string& text) {
  if (as_json)
    std::cout << j.dump(2) << "\n";
  else
    std::cout << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<Formula> parse_all(const std::vector<std::string>& texts) {
  std::vector<Formula> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(parse(t));
  return out;
}

template <class T>
std::vector<T> parse_csv(const std::string& text) {
  std::vector<T> out;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t comma = text.find(',', pos);
    std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!item.empty()) {
      size_t used = 0;
      long long v = std::stoll(item, &used);
      if (used != item.size()) throw std::invalid_argument("bad list entry: " + item);
      out.push_back(static_cast<T>(v));
    } else if (!text.empty()) {
      throw std::invalid_argument("empty list entry");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

json model_json(const Model& m) { return json::parse(model_to_json(m)); }

json subst_json(const Substitution& s) {
  json o = json::object();
  for (const auto& [v, f] : s.entries()) o["x" + std::to_string(v)] = print(f);
  return o;
}

// ---------------------------------------------------------------------------
// derive
// ---------------------------------------------------------------------------

struct DeriveArgs {
  std::string logic;
  std::vector<std::string> premises;
  std::vector<std::string> goals;
  bool tight = false;
  bool as_json = false;
};

int run_derive(const DeriveArgs& a) {
  LogicSpec L = preset(a.logic);
  DeriveOptions opts;
  opts.linear_tight = a.tight;
  DerivVerdict v = derives(L, parse_all(a.premises), parse_all(a.goals), opts);
  json out{{"logic", L.name}, {"verdict", v.derivable ? "derivable" : "not-derivable"}};
  std::string text = v.derivable ? "derivable\n" : "not derivable\n";
  if (!v.derivable && v.countermodel) {
    out["countermodel"] = model_json(*v.countermodel);
    out["root"] = v.root;
    text += "countermodel (root " + std::to_string(v.root) + "): " +
            model_to_json(*v.countermodel) + "\n";
  }
  emit(a.as_json, out, text);
  return v.derivable ? kYes : kNo;
}

// ---------------------------------------------------------------------------
// admissible
// ---------------------------------------------------------------------------

struct AdmArgs {
  std::string logic;
  std::vector<std::string> premises;
  std::vector<std::string> conclusions;
  std::string engine = "auto";
  unsigned cap = 6;
  bool as_json = false;
};

int run_admissible(const AdmArgs& a) {
  LogicSpec L = preset(a.logic);
  Rule rule{parse_all(a.premises), parse_all(a.conclusions)};
  std::string engine = a.engine;
  if (engine == "auto") {
    if (L.linear && !L.base.empty() && L.forbidden_reducts.empty())
      engine = "linear";
    else if (L.depth_bound != kUnbounded && !L.base.empty())
      engine = "bddp";
    else
      engine = "clx";
  }
  AdmVerdict v;
  if (engine == "linear")
    v = admissible_linear_clx(L, rule);
  else if (engine == "bddp")
    v = admissible_bddp(L, rule);
  else if (engine == "clx")
    v = admissible_clx(L, rule, a.cap);
  else
    throw std::invalid_argument("unknown engine: " + engine);

  const char* name = v.status == AdmStatus::Inadmissible      ? "inadmissible"
                     : v.status == AdmStatus::Admissible      ? "admissible"
                                                              : "bounded-admissible";
  json out{{"logic", L.name}, {"engine", engine},   {"verdict", name},
           {"cap", v.cap},    {"complete", v.complete}};
  std::string text = std::string(name) + " (engine " + engine + ")\n";
  if (v.counterexample) {
    out["counterexample"] = model_json(*v.counterexample);
    text += "counterexample: " + model_to_json(*v.counterexample) + "\n";
  }
  if (v.status == AdmStatus::BoundedAdmissible || !v.complete) {
    out["reason"] = "no counterexample within cap " + std::to_string(v.cap) +
                    "; verdict incomplete";
  }
  emit(a.as_json, out, text);
  if (v.status == AdmStatus::Inadmissible) return kNo;
  if (v.status == AdmStatus::Admissible && v.complete) return kYes;
  return kUnknown;
}

// ---------------------------------------------------------------------------
// unifiable
// ---------------------------------------------------------------------------

struct UnifArgs {
  std::string logic;
  std::string formula;
  bool as_json = false;
};

int run_unifiable(const UnifArgs& a) {
  LogicSpec L = preset(a.logic);
  UnifVerdict v = unifiable(L, parse(a.formula));
  const char* name = v.status == UnifStatus::Unifiable      ? "unifiable"
                     : v.status == UnifStatus::NotUnifiable ? "not-unifiable"
                                                            : "unknown";
  json out{{"logic", L.name}, {"verdict", name}};
  std::string text = std::string(name) + "\n";
  if (v.witness) {
    out["witness"] = subst_json(*v.witness);
    text += "unifier:";
    for (const auto& [var, f] : v.witness->entries())
      text += " x" + std::to_string(var) + " := " + print(f) + ";";
    text += "\n";
  }
  if (v.valuation) out["valuation"] = model_json(*v.valuation);
  if (v.status == UnifStatus::BoundedUnknown)
    out["reason"] = "every applicable engine was inconclusive at its budget";
  emit(a.as_json, out, text);
  return v.status == UnifStatus::Unifiable      ? kYes
         : v.status == UnifStatus::NotUnifiable ? kNo
                                                : kUnknown;
}

// ---------------------------------------------------------------------------
// translate
// ---------------------------------------------------------------------------

struct TranslateArgs {
  std::string mode;
  std::string formula;
  std::string relativizer = "p0";
  bool as_json = false;
};

int run_translate(const TranslateArgs& a) {
  Formula f = parse(a.formula);
  json out{{"mode", a.mode}};
  std::string text;
  if (a.mode == "boxdot") {
    Formula g = boxdot_translate(f);
    out["result"] = print(g);
    text = print(g) + "\n";
  } else if (a.mode == "gmt") {
    Formula g = gmt(IpcFormula(f));
    out["result"] = print(g);
    text = print(g) + "\n";
  } else if (a.mode == "relativize") {
    Formula g = relativize(f, parse(a.relativizer));
    out["result"] = print(g);
    text = print(g) + "\n";
  } else if (a.mode == "eff-boxdot") {
    EffBoxdot eb = eff_boxdot(f);
    out["result"] = print(eb.formula);
    json table = json::array();
    for (const auto& [var, sub] : eb.table)
      table.push_back({{"var", "x" + std::to_string(var)}, {"abbreviates", print(sub)}});
    out["table"] = table;
    out["sigma"] = subst_json(eb.sigma);
    text = print(eb.formula) + "\n";
    for (const auto& [var, sub] : eb.table)
      text += "x" + std::to_string(var) + " abbreviates " + print(sub) + "\n";
  } else {
    throw std::invalid_argument("unknown translation mode: " + a.mode);
  }
  emit(a.as_json, out, text);
  return kYes;
}

// ---------------------------------------------------------------------------
// reduce
// ---------------------------------------------------------------------------

struct ReduceArgs {
  std::string family;
  std::string path;
  std::string inline_src;
  int level = -1;
  bool truth = false;
  long long witness_mask = -1;
};

ThirdOrderSentence sentence_from_json(const json& j) {
  ThirdOrderSentence s;
  std::string pat = j.value("pattern", "sigma2");
  if (pat == "sigma2")
    s.pattern = SetPattern::Sigma2;
  else if (pat == "pi2")
    s.pattern = SetPattern::Pi2;
  else if (pat == "sigma3")
    s.pattern = SetPattern::Sigma3;
  else
    throw std::invalid_argument("unknown pattern: " + pat);
  s.n = j.value("n", 1u);
  s.m = j.value("m", 1u);
  s.matrix = parse_matrix(j.at("matrix").get<std::string>());
  return s;
}

Qbf qbf_from_json(const json& j) {
  Qbf q;
  q.d = j.value("d", 1u);
  q.m = j.value("m", 1u);
  q.matrix = parse_matrix(j.at("matrix").get<std::string>());
  return q;
}

int run_reduce(const ReduceArgs& a) {
  if (a.path.empty() == a.inline_src.empty())
    throw std::invalid_argument("reduce needs exactly one of --in / --source");
  json src = json::parse(a.inline_src.empty() ? read_file(a.path) : a.inline_src);
  bool qbf_family = a.family == "qbf" || a.family == "psp1par";
  std::string kind = src.value("kind", qbf_family ? "qbf" : "sentence");
  if (kind != (qbf_family ? "qbf" : "sentence"))
    throw std::invalid_argument("family " + a.family + " needs a " +
                                (qbf_family ? "qbf" : "sentence") + " source");
  std::optional<unsigned> level;
  if (a.level >= 0) level = static_cast<unsigned>(a.level);

  ReductionInstance inst;
  std::optional<ThirdOrderSentence> s;
  std::optional<Qbf> q;
  if (qbf_family) {
    q = qbf_from_json(src);
    inst = a.family == "qbf" ? gen_qbf(*q) : gen_psp_irr(*q);
  } else {
    s = sentence_from_json(src);
    if (a.family == "nexp")
      inst = gen_nexp(*s);
    else if (a.family == "conexp")
      inst = gen_conexp(*s);
    else if (a.family == "sig2exp")
      inst = gen_sig2exp(*s);
    else if (a.family == "nexp1par")
      inst = gen_nexp_1par(*s, false, level);
    else if (a.family == "nexp2par")
      inst = gen_nexp_1par(*s, true, level);
    else if (a.family == "nexp0adm")
      inst = gen_nexp_0par_adm(*s);
    else
      throw std::invalid_argument("unknown family: " + a.family);
  }

  json out{{"family", inst.family},
           {"source", src},
           {"xi", print(inst.xi)},
           {"xi_size", inst.xi_size},
           {"params", inst.params},
           {"vars", inst.vars},
           {"witness_recipe", inst.witness_recipe}};
  if (inst.zeta) out["zeta"] = print(*inst.zeta);
  if (level) out["level"] = *level;
  if (a.truth) out["truth"] = q ? qbf_true(*q) : sentence_true(*s);
  if (a.witness_mask >= 0) {
    uint64_t mask = static_cast<uint64_t>(a.witness_mask);
    Substitution sig;
    if (a.family == "nexp")
      sig = nexp_witness(*s, mask);
    else if (a.family == "nexp1par")
      sig = nexp_1par_witness(*s, false, mask, level);
    else if (a.family == "nexp2par")
      sig = nexp_1par_witness(*s, true, mask, level);
    else if (a.family == "nexp0adm")
      sig = nexp_0par_adm_witness(*s, mask);
    else
      throw std::invalid_argument("family " + a.family +
                                  " has no closed-form witness substitution");
    out["witness_mask"] = mask;
    out["witness"] = subst_json(sig);
  }
  std::cout << out.dump(2) << "\n";  // instances are always machine output
  return kYes;
}

// ---------------------------------------------------------------------------
// frame analyze / check-map / transform
// ---------------------------------------------------------------------------

struct FrameArgs {
  std::string in;
  std::string source, target, map, kind = "subreduction";
  bool onto = false, cofinal = false;
  std::string op;
  unsigned point = 0;
  std::string points;
  bool as_json = false;
};

int run_frame_analyze(const FrameArgs& a) {
  Model m = model_from_json(read_file(a.in));
  FrameStats st = analyze(m.frame());
  json out{{"points", m.frame().size()},
           {"clusters", st.clusters},
           {"cluster_refl", st.cluster_refl},
           {"depth", st.depth},
           {"width", st.width},
           {"max_cluster", st.max_cluster},
           {"rooted", st.rooted},
           {"final_clusters", st.final_clusters}};
  if (st.root_cluster) out["root_cluster"] = *st.root_cluster;
  std::string text = "points " + std::to_string(m.frame().size()) + ", clusters " +
                     std::to_string(st.clusters.size()) + ", depth " +
                     std::to_string(st.depth) + ", width " + std::to_string(st.width) +
                     ", max cluster " + std::to_string(st.max_cluster) +
                     (st.rooted ? ", rooted" : ", not rooted") + "\n";
  emit(a.as_json, out, text);
  return kYes;
}

int run_frame_check_map(const FrameArgs& a) {
  Model src = model_from_json(read_file(a.source));
  Model tgt = model_from_json(read_file(a.target));
  FrameMap m;
  m.image = parse_csv<int>(a.map);
  if (a.kind == "pmorphism")
    m.kind = MapKind::PMorphism;
  else if (a.kind == "subreduction")
    m.kind = MapKind::Subreduction;
  else if (a.kind == "weak-subreduction")
    m.kind = MapKind::WeakSubreduction;
  else
    throw std::invalid_argument("unknown map kind: " + a.kind);
  m.require_onto = a.onto;
  m.require_cofinal = a.cofinal;
  bool ok = check_map(m, src.frame(), tgt.frame());
  emit(a.as_json, json{{"kind", a.kind}, {"valid", ok}},
       ok ? "valid\n" : "invalid\n");
  return ok ? kYes : kNo;
}

int run_frame_transform(const FrameArgs& a) {
  Model m = model_from_json(read_file(a.in));
  Frame f = m.frame();
  Frame g;
  if (a.op == "reflexivize")
    g = reflexivization(f);
  else if (a.op == "skeleton")
    g = skeleton(f);
  else if (a.op == "cone")
    g = cone(f, a.point);
  else if (a.op == "generated")
    g = generated_subframe(f, parse_csv<unsigned>(a.points));
  else if (a.op == "induced")
    g = induced_subframe(f, parse_csv<unsigned>(a.points));
  else
    throw std::invalid_argument("unknown transform: " + a.op);
  std::cout << model_to_json(Model(g)) << "\n";  // valuations are dropped
  return kYes;
}

// ---------------------------------------------------------------------------
// universal
// ---------------------------------------------------------------------------

struct UniversalArgs {
  std::string logic;
  std::string params;
  unsigned stages = 1;
  unsigned budget = kUniversalPointBudget;
  bool as_json = false;
};

int run_universal(const UniversalArgs& a) {
  LogicSpec L = preset(a.logic);
  UniversalFrameLevel lvl =
      universal_frame(L, parse_csv<unsigned>(a.params), a.stages, a.budget);
  json out{{"logic", lvl.logic.name},
           {"params", lvl.params},
           {"stages", lvl.stages},
           {"stage_points", lvl.stage_points},
           {"names", lvl.names},
           {"model", model_json(lvl.model)}};
  std::string text = "stage point counts:";
  for (unsigned c : lvl.stage_points) text += " " + std::to_string(c);
  text += "\n" + model_to_json(lvl.model) + "\n";
  emit(a.as_json, out, text);
  return kYes;
}

// ---------------------------------------------------------------------------
// oracle enumerate / refute / unify-valuation
// ---------------------------------------------------------------------------

struct OracleArgs {
  std::string logic;
  unsigned max_points = 6;
  bool rooted = false;
  bool single_cluster = false;
  std::string refl = "any";
  bool count_only = false;
  unsigned cap = 6;
  std::string formula;
  std::string frame;
  bool as_json = false;
};

int run_oracle_enumerate(const OracleArgs& a) {
  EnumerationSpec spec;
  spec.max_points = a.max_points;
  if (!a.logic.empty()) spec.logic = preset(a.logic);
  spec.rooted = a.rooted;
  spec.single_cluster = a.single_cluster;
  if (a.refl == "any")
    spec.refl = EnumerationSpec::Refl::Any;
  else if (a.refl == "reflexive")
    spec.refl = EnumerationSpec::Refl::AllReflexive;
  else if (a.refl == "irreflexive")
    spec.refl = EnumerationSpec::Refl::AllIrreflexive;
  else
    throw std::invalid_argument("unknown reflexivity filter: " + a.refl);
  std::vector<Frame> frames = enumerate_frames(spec);
  json out{{"count", frames.size()}};
  std::string text = std::to_string(frames.size()) + " frames\n";
  if (!a.count_only) {
    json arr = json::array();
    for (const Frame& f : frames) arr.push_back(model_json(Model(f)));
    out["frames"] = arr;
    for (const Frame& f : frames) text += model_to_json(Model(f)) + "\n";
  }
  emit(a.as_json, out, text);
  return kYes;
}

int run_oracle_refute(const OracleArgs& a) {
  LogicSpec L = preset(a.logic);
  auto r = brute_countermodel(L, parse(a.formula), a.cap);
  if (!r) {
    emit(a.as_json, json{{"refuted", false}, {"cap", a.cap}},
         "no countermodel within " + std::to_string(a.cap) + " points\n");
    return kNo;
  }
  emit(a.as_json,
       json{{"refuted", true}, {"point", r->point}, {"model", model_json(r->model)}},
       "refuted at point " + std::to_string(r->point) + ": " +
           model_to_json(r->model) + "\n");
  return kYes;
}

int run_oracle_unify_valuation(const OracleArgs& a) {
  LogicSpec L = preset(a.logic);
  Model frame = model_from_json(read_file(a.frame));
  auto m = brute_valuation_unify(L, parse(a.formula), frame);
  if (!m) {
    emit(a.as_json, json{{"valuation", nullptr}}, "no valuation\n");
    return kNo;
  }
  emit(a.as_json, json{{"valuation", model_json(*m)}}, model_to_json(*m) + "\n");
  return kYes;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchArgs {
  std::string family = "qbf";
  unsigned count = 10;
  uint64_t seed = 0;
  unsigned size = 5;
  unsigned depth_max = 2;
  std::string logic = "K4";
  unsigned cap = 4;
  bool as_json = false;
};

MatrixExpr random_matrix(std::mt19937_64& rng, unsigned size,
                         const std::vector<MatrixExpr>& leaves) {
  if (size <= 1) return leaves[rng() % leaves.size()];
  switch (rng() % 5) {
    case 0:
      return MatrixExpr::neg(random_matrix(rng, size - 1, leaves));
    case 1:
      return MatrixExpr::conj(random_matrix(rng, size / 2, leaves),
                              random_matrix(rng, size - size / 2, leaves));
    case 2:
      return MatrixExpr::disj(random_matrix(rng, size / 2, leaves),
                              random_matrix(rng, size - size / 2, leaves));
    case 3:
      return MatrixExpr::imp(random_matrix(rng, size / 2, leaves),
                             random_matrix(rng, size - size / 2, leaves));
    default:
      return MatrixExpr::iff(random_matrix(rng, size / 2, leaves),
                             random_matrix(rng, size - size / 2, leaves));
  }
}

Formula random_formula(std::mt19937_64& rng, unsigned size,
                       const std::vector<Formula>& leaves) {
  if (size <= 1) return leaves[rng() % leaves.size()];
  switch (rng() % 7) {
    case 0:
      return Formula::neg(random_formula(rng, size - 1, leaves));
    case 1:
      return Formula::box(random_formula(rng, size - 1, leaves));
    case 2:
      return Formula::dia(random_formula(rng, size - 1, leaves));
    case 3:
      return Formula::conj(random_formula(rng, size / 2, leaves),
                           random_formula(rng, size - size / 2, leaves));
    case 4:
      return Formula::disj(random_formula(rng, size / 2, leaves),
                           random_formula(rng, size - size / 2, leaves));
    case 5:
      return Formula::imp(random_formula(rng, size / 2, leaves),
                          random_formula(rng, size - size / 2, leaves));
    default:
      return Formula::iff(random_formula(rng, size / 2, leaves),
                          random_formula(rng, size - size / 2, leaves));
  }
}

int run_bench(const BenchArgs& a) {
  std::mt19937_64 rng(a.seed);
  unsigned mismatches = 0, unknowns = 0, positives = 0;
  uint64_t max_size = 0;
  json items = json::array();

  for (unsigned i = 0; i < a.count; ++i) {
    if (a.family == "qbf") {
      unsigned d = 1 + static_cast<unsigned>(rng() % a.depth_max);
      std::vector<MatrixExpr> leaves;
      for (unsigned b = 0; b < d; ++b) {
        leaves.push_back(MatrixExpr::univ(b, 0));
        leaves.push_back(MatrixExpr::exist(b, 0));
      }
      Qbf src{d, 1, random_matrix(rng, a.size, leaves)};
      bool truth = qbf_true(src);
      positives += truth;
      ReductionInstance inst = gen_qbf(src);
      max_size = std::max<uint64_t>(max_size, inst.xi_size);
      LogicSpec L = preset("S4Grz.3+BD" + std::to_string(d));
      UnifVerdict v = unifiable(L, inst.xi);
      bool ok = v.status ==
                (truth ? UnifStatus::Unifiable : UnifStatus::NotUnifiable);
      if (v.status == UnifStatus::BoundedUnknown)
        ++unknowns;
      else if (!ok)
        ++mismatches;
      items.push_back({{"d", d},
                       {"matrix", print_matrix(src.matrix)},
                       {"truth", truth},
                       {"xi_size", inst.xi_size},
                       {"verified", ok}});
    } else if (a.family == "nexp") {
      std::vector<MatrixExpr> leaves{MatrixExpr::top(), MatrixExpr::bot(),
                                     MatrixExpr::elem(0, 0), MatrixExpr::in_x(0)};
      ThirdOrderSentence src{1, 1, SetPattern::Sigma2,
                             random_matrix(rng, a.size, leaves)};
      bool truth = sentence_true(src);
      positives += truth;
      ReductionInstance inst = gen_nexp(src);
      max_size = std::max<uint64_t>(max_size, inst.xi_size);
      bool ok = true;
      if (truth) {
        Substitution sig = nexp_witness(src, *sigma2_witness(src));
        ok = derives(preset("K4"), {}, {sig(inst.xi)}).derivable;
      } else {
        for (uint64_t X = 0; X < 4 && ok; ++X) {
          Substitution sig = nexp_witness(src, X);
          ok = !derives(preset("K4"), {}, {sig(inst.xi)}).derivable;
        }
      }
      if (!ok) ++mismatches;
      items.push_back({{"matrix", print_matrix(src.matrix)},
                       {"truth", truth},
                       {"xi_size", inst.xi_size},
                       {"verified", ok}});
    } else if (a.family == "derive") {
      std::vector<Formula> leaves{Formula::var(0), Formula::var(1),
                                  Formula::par(0), Formula::bot()};
      Formula f = random_formula(rng, a.size, leaves);
      LogicSpec L = preset(a.logic);
      DerivVerdict v = derives(L, {}, {f});
      auto cm = brute_countermodel(L, f, a.cap);
      bool ok = v.derivable == !cm.has_value();
      if (!v.derivable && v.countermodel)
        ok = ok && !model_check(*v.countermodel, v.root, f);
      if (!ok) ++mismatches;
      positives += v.derivable;
      items.push_back(
          {{"formula", print(f)}, {"derivable", v.derivable}, {"verified", ok}});
    } else {
      throw std::invalid_argument("unknown bench family: " + a.family);
    }
  }

  json out{{"family", a.family},   {"count", a.count},
           {"seed", a.seed},       {"positive", positives},
           {"mismatches", mismatches}, {"unknown", unknowns},
           {"max_xi_size", max_size},  {"items", items}};
  std::string text = a.family + " bench: " + std::to_string(a.count) +
                     " instances, " + std::to_string(positives) + " positive, " +
                     std::to_string(mismatches) + " mismatches, " +
                     std::to_string(unknowns) + " unknown\n";
  emit(a.as_json, out, text);
  if (mismatches) return kNo;
  return unknowns ? kUnknown : kYes;
}

int guarded(bool as_json, const std::function<int()>& body) {
  try {
    return body();
  } catch (const BudgetError& e) {
    if (as_json)
      std::cout << json{{"verdict", "unknown"}, {"reason", e.what()}}.dump(2) << "\n";
    else
      std::cerr << "budget: " << e.what() << "\n";
    return kUnknown;
  } catch (const ParseError& e) {
    std::cerr << "parse error at " << e.position << ": " << e.what() << "\n";
    return kUsage;
  } catch (const json::exception& e) {
    std::cerr << "json error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "tml: decision procedures for derivability, admissibility, and\n"
      "unifiability with parameters in transitive modal logics.\n"
      "Atoms: x<i> variables (substitutable), p<i> parameters (fixed).\n"
      "Exit codes: 0 positive verdict, 1 negative verdict, 2 usage error,\n"
      "3 budget exhausted / verdict unknown (JSON carries a reason field)."};
  app.require_subcommand(1);

  DeriveArgs da;
  auto* derive_cmd = app.add_subcommand(
      "derive", "Multi-conclusion derivability |~ over a logic preset");
  derive_cmd->add_option("--logic", da.logic, "logic preset, e.g. K4, S4.3, GL+BD2")
      ->required();
  derive_cmd->add_option("--premise", da.premises, "premise formula (repeatable)");
  derive_cmd->add_option("goal", da.goals, "conclusion formula(s)")->required();
  derive_cmd->add_flag("--tight", da.tight,
                       "minimum-size countermodels (linear logics)");
  derive_cmd->add_flag("--json", da.as_json, "machine-readable output");

  AdmArgs aa;
  auto* adm_cmd = app.add_subcommand(
      "admissible", "Multi-conclusion admissibility of a rule premises/conclusions");
  adm_cmd->add_option("--logic", aa.logic, "logic preset")->required();
  adm_cmd->add_option("--premise", aa.premises, "rule premise (repeatable)");
  adm_cmd->add_option("--conclusion", aa.conclusions,
                      "rule conclusion (repeatable; may be empty)");
  adm_cmd->add_option("--engine", aa.engine,
                      "auto|clx|linear|bddp (default picks the complete engine "
                      "for the spec shape)");
  adm_cmd->add_option("--cap", aa.cap, "model size cap for the clx engine");
  adm_cmd->add_flag("--json", aa.as_json, "machine-readable output");

  UnifArgs ua;
  auto* unif_cmd =
      app.add_subcommand("unifiable", "Unifiability with parameters");
  unif_cmd->add_option("--logic", ua.logic, "logic preset")->required();
  unif_cmd->add_option("formula", ua.formula, "formula")->required();
  unif_cmd->add_flag("--json", ua.as_json, "machine-readable output");

  TranslateArgs ta;
  auto* tr_cmd = app.add_subcommand("translate",
                                    "boxdot / eff-boxdot / gmt / relativize");
  tr_cmd->add_option("--mode", ta.mode, "boxdot|eff-boxdot|gmt|relativize")
      ->required();
  tr_cmd->add_option("formula", ta.formula, "input formula")->required();
  tr_cmd->add_option("--relativizer", ta.relativizer,
                     "relativization atom (default p0)");
  tr_cmd->add_flag("--json", ta.as_json, "machine-readable output");

  ReduceArgs ra;
  auto* red_cmd = app.add_subcommand(
      "reduce",
      "Hardness-reduction generators; emits the instance as JSON.\n"
      "Sentence sources: {\"kind\":\"sentence\",\"pattern\":\"sigma2|pi2|sigma3\","
      "\"n\":1,\"m\":1,\"matrix\":\"X(0)\"}\n"
      "QBF sources: {\"kind\":\"qbf\",\"d\":2,\"m\":1,\"matrix\":\"a(0,0) <-> b(1,0)\"}");
  red_cmd
      ->add_option("--family", ra.family,
                   "nexp|conexp|sig2exp|qbf|psp1par|nexp1par|nexp2par|nexp0adm")
      ->required();
  red_cmd->add_option("--in", ra.path, "source JSON file");
  red_cmd->add_option("--source", ra.inline_src, "inline source JSON");
  red_cmd->add_option(
      "--level", ra.level,
      "explicit tower level for nexp1par/nexp2par (even, large enough for the "
      "source; default: least even level fitting the construction)");
  red_cmd->add_flag("--truth", ra.truth, "include brute-force source truth");
  red_cmd->add_option("--witness-mask", ra.witness_mask,
                      "emit the witness substitution for this set-family mask "
                      "(witnessed families only)");

  FrameArgs fa;
  auto* frame_cmd = app.add_subcommand("frame", "frame utilities");
  frame_cmd->require_subcommand(1);
  auto* fan = frame_cmd->add_subcommand("analyze", "cluster structure and stats");
  fan->add_option("--in", fa.in, "frame/model JSON file")->required();
  fan->add_flag("--json", fa.as_json, "machine-readable output");
  auto* fcm = frame_cmd->add_subcommand(
      "check-map", "validate a p-morphism / (weak) subreduction");
  fcm->add_option("--source", fa.source, "source frame JSON file")->required();
  fcm->add_option("--target", fa.target, "target frame JSON file")->required();
  fcm->add_option("--map", fa.map, "comma list of images, -1 = undefined")
      ->required();
  fcm->add_option("--kind", fa.kind, "pmorphism|subreduction|weak-subreduction");
  fcm->add_flag("--onto", fa.onto, "require surjectivity");
  fcm->add_flag("--cofinal", fa.cofinal, "require cofinal domain");
  fcm->add_flag("--json", fa.as_json, "machine-readable output");
  auto* ftr = frame_cmd->add_subcommand("transform",
                                        "reflexivize|skeleton|cone|generated|induced");
  ftr->add_option("--op", fa.op, "transform name")->required();
  ftr->add_option("--in", fa.in, "frame/model JSON file")->required();
  ftr->add_option("--point", fa.point, "cone apex");
  ftr->add_option("--points", fa.points, "comma list of points");

  UniversalArgs uva;
  auto* univ_cmd = app.add_subcommand(
      "universal", "staged approximation of the universal parametric frame");
  univ_cmd->add_option("--logic", uva.logic, "logic preset")->required();
  univ_cmd->add_option("--params", uva.params,
                       "comma list of parameter indices (default none)");
  univ_cmd->add_option("--stages", uva.stages, "stage count")->required();
  univ_cmd->add_option("--budget", uva.budget, "point budget");
  univ_cmd->add_flag("--json", uva.as_json, "machine-readable output");

  OracleArgs oa;
  auto* oracle_cmd = app.add_subcommand("oracle", "brute-force baselines");
  oracle_cmd->require_subcommand(1);
  auto* oen = oracle_cmd->add_subcommand(
      "enumerate", "canonical transitive frames up to a point bound");
  oen->add_option("--max", oa.max_points, "max points (hard ceiling 7)");
  oen->add_option("--logic", oa.logic, "keep only frames of this logic");
  oen->add_flag("--rooted", oa.rooted, "rooted frames only");
  oen->add_flag("--single-cluster", oa.single_cluster, "single-cluster frames only");
  oen->add_option("--refl", oa.refl, "any|reflexive|irreflexive");
  oen->add_flag("--count-only", oa.count_only, "suppress frame listing");
  oen->add_flag("--json", oa.as_json, "machine-readable output");
  auto* orf = oracle_cmd->add_subcommand("refute",
                                         "least countermodel within a size cap");
  orf->add_option("--logic", oa.logic, "logic preset")->required();
  orf->add_option("--cap", oa.cap, "max model size");
  orf->add_option("formula", oa.formula, "formula to refute")->required();
  orf->add_flag("--json", oa.as_json, "machine-readable output");
  auto* ouv = oracle_cmd->add_subcommand(
      "unify-valuation", "variable valuation on a fixed parametric frame");
  ouv->add_option("--logic", oa.logic, "logic preset")->required();
  ouv->add_option("--frame", oa.frame, "parametric frame JSON file")->required();
  ouv->add_option("formula", oa.formula, "formula")->required();
  ouv->add_flag("--json", oa.as_json, "machine-readable output");

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand(
      "bench", "generate and verify batches of random instances");
  bench_cmd->add_option("--family", ba.family, "qbf|nexp|derive");
  bench_cmd->add_option("--count", ba.count, "instance count");
  bench_cmd->add_option("--seed", ba.seed, "RNG seed");
  bench_cmd->add_option("--size", ba.size, "formula/matrix size budget");
  bench_cmd->add_option("--depth-max", ba.depth_max, "max QBF depth");
  bench_cmd->add_option("--logic", ba.logic, "logic preset (derive family)");
  bench_cmd->add_option("--cap", ba.cap, "oracle countermodel cap (derive family)");
  bench_cmd->add_flag("--json", ba.as_json, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  if (derive_cmd->parsed()) return guarded(da.as_json, [&] { return run_derive(da); });
  if (adm_cmd->parsed()) return guarded(aa.as_json, [&] { return run_admissible(aa); });
  if (unif_cmd->parsed()) return guarded(ua.as_json, [&] { return run_unifiable(ua); });
  if (tr_cmd->parsed()) return guarded(ta.as_json, [&] { return run_translate(ta); });
  if (red_cmd->parsed()) return guarded(true, [&] { return run_reduce(ra); });
  if (frame_cmd->parsed()) {
    if (frame_cmd->get_subcommand("analyze")->parsed())
      return guarded(fa.as_json, [&] { return run_frame_analyze(fa); });
    if (frame_cmd->get_subcommand("check-map")->parsed())
      return guarded(fa.as_json, [&] { return run_frame_check_map(fa); });
    return guarded(false, [&] { return run_frame_transform(fa); });
  }
  if (univ_cmd->parsed()) return guarded(uva.as_json, [&] { return run_universal(uva); });
  if (oracle_cmd->parsed()) {
    if (oracle_cmd->get_subcommand("enumerate")->parsed())
      return guarded(oa.as_json, [&] { return run_oracle_enumerate(oa); });
    if (oracle_cmd->get_subcommand("refute")->parsed())
      return guarded(oa.as_json, [&] { return run_oracle_refute(oa); });
    return guarded(oa.as_json, [&] { return run_oracle_unify_valuation(oa); });
  }
  return guarded(ba.as_json, [&] { return run_bench(ba); });
}
