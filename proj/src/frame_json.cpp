#include <json.hpp>

#include "tml/frame.hpp"

namespace tml {

using nlohmann::json;

Model model_from_json(const std::string& text) {
  json j = json::parse(text);
  if (!j.contains("points") || !j["points"].is_array())
    throw FrameError("frame JSON: missing points array");
  size_t n = j["points"].size();
  std::vector<bool> declared_refl(n, false);
  std::vector<bool> seen(n, false);
  for (const auto& pt : j["points"]) {
    unsigned id = pt.at("id").get<unsigned>();
    if (id >= n || seen[id]) throw FrameError("frame JSON: point ids must be 0..n-1, unique");
    seen[id] = true;
    declared_refl[id] = pt.value("reflexive", false);
  }
  Frame f(n);
  for (unsigned w = 0; w < n; ++w) f.set_refl(w, declared_refl[w]);
  if (j.contains("order"))
    for (const auto& pr : j["order"]) {
      unsigned a = pr.at(0).get<unsigned>(), b = pr.at(1).get<unsigned>();
      if (a >= n || b >= n) throw FrameError("frame JSON: order pair out of range");
      if (a == b) {
        if (!declared_refl[a])
          throw FrameError("frame JSON: self-loop on point declared irreflexive");
        continue;
      }
      f.add_lt(a, b);
    }
  // close manually so undeclared cycles are rejected instead of silently
  // upgraded to reflexive clusters
  for (unsigned k = 0; k < n; ++k)
    for (unsigned i = 0; i < n; ++i)
      if (f.lt(i, k))
        for (unsigned j2 = 0; j2 < n; ++j2)
          if (f.lt(k, j2) && i != j2 && !f.lt(i, j2)) f.add_lt(i, j2);
  for (unsigned i = 0; i < n; ++i)
    for (unsigned j2 = 0; j2 < n; ++j2)
      if (i != j2 && f.lt(i, j2) && f.lt(j2, i) && (!declared_refl[i] || !declared_refl[j2]))
        throw FrameError(
            "frame JSON: strict cycle through points not declared reflexive "
            "(proper clusters need reflexive:true on all members)");
  f.validate();
  Model m(f);
  auto load_val = [&](const char* key, char prefix) {
    if (!j.contains(key)) return;
    for (auto it = j[key].begin(); it != j[key].end(); ++it) {
      const std::string& name = it.key();
      if (name.empty() || name[0] != prefix)
        throw FrameError(std::string("frame JSON: bad atom name ") + name);
      unsigned index = std::stoul(name.substr(1));
      std::vector<bool> bits(n, false);
      for (const auto& p : it.value()) {
        unsigned w = p.get<unsigned>();
        if (w >= n) throw FrameError("frame JSON: valuation point out of range");
        bits[w] = true;
      }
      if (prefix == 'p')
        m.set_par(index, bits);
      else
        m.set_var(index, bits);
    }
  };
  load_val("params", 'p');
  load_val("vars", 'x');
  return m;
}

std::string model_to_json(const Model& m) {
  const Frame& f = m.frame();
  json pts = json::array();
  for (unsigned w = 0; w < f.size(); ++w)
    pts.push_back({{"id", w}, {"reflexive", f.refl(w)}});
  json order = json::array();
  for (unsigned w = 0; w < f.size(); ++w)
    for (unsigned v = 0; v < f.size(); ++v)
      if (f.lt(w, v)) order.push_back({w, v});
  json out{{"points", pts}, {"order", order}};
  auto dump_val = [&](const std::map<unsigned, std::vector<bool>>& table, char prefix) {
    json obj = json::object();
    for (const auto& [index, bits] : table) {
      json arr = json::array();
      for (unsigned w = 0; w < bits.size(); ++w)
        if (bits[w]) arr.push_back(w);
      obj[std::string(1, prefix) + std::to_string(index)] = arr;
    }
    return obj;
  };
  if (!m.pars().empty()) out["params"] = dump_val(m.pars(), 'p');
  if (!m.vars().empty()) out["vars"] = dump_val(m.vars(), 'x');
  return out.dump();
}

}  // namespace tml
