#include "bfamr/oracle.hpp"

#include <algorithm>
#include <random>

#include "bfamr/error.hpp"
#include "bfamr/vocab.hpp"
#include "json.hpp"

namespace bfamr {

Action Action::connect(int target, std::string label, bool reverse) {
  Action a;
  a.kind = ActionKind::ConnectExisting;
  a.target = target;
  a.label = std::move(label);
  a.reverse = reverse;
  return a;
}

Action Action::new_instance(std::vector<std::string> content, std::optional<std::string> sense,
                            std::string label, bool reverse) {
  Action a;
  a.kind = ActionKind::NewInstance;
  a.content = std::move(content);
  a.sense = std::move(sense);
  a.label = std::move(label);
  a.reverse = reverse;
  return a;
}

Action Action::new_attribute(std::vector<std::string> content, std::string label, bool quoted) {
  Action a;
  a.kind = ActionKind::NewAttribute;
  a.content = std::move(content);
  a.label = std::move(label);
  a.quoted = quoted;
  return a;
}

int DecoderState::focus_child_count() const {
  return static_cast<int>(std::count_if(partial.edges().begin(), partial.edges().end(),
                                        [&](const Edge& e) { return e.src == focused; }));
}

DecoderState initial_state() {
  DecoderState s;
  s.partial.add_vertex(VertexType::Instance, {std::string(kRootSymbol)});
  s.partial.set_root(kBogVertex);
  s.focus_queue.push_back(kBogVertex);
  s.focused = kBogVertex;
  s.produced.push_back(kBogVertex);
  return s;
}

void apply_in_place(DecoderState& s, const Action& a) {
  if (s.terminal) throw UserError("action applied after the terminal state");
  if (a.kind != ActionKind::NoMoreChildren && a.label.empty())
    throw UserError("child action without an edge label");
  switch (a.kind) {
    case ActionKind::NoMoreChildren:
      s.focus_queue.pop_front();
      if (s.focus_queue.empty())
        s.terminal = true;
      else
        s.focused = s.focus_queue.front();
      break;
    case ActionKind::ConnectExisting: {
      if (a.target < 0 || a.target >= static_cast<int>(s.produced.size()))
        throw UserError("ConnectExisting target " + std::to_string(a.target) + " not produced");
      const int target = s.produced[static_cast<std::size_t>(a.target)];
      if (target == kBogVertex) throw UserError("ConnectExisting cannot target the BOG vertex");
      if (target == s.focused) throw UserError("ConnectExisting would create a self-loop");
      const int sem_src = a.reverse ? target : s.focused;
      const int sem_dst = a.reverse ? s.focused : target;
      if (!s.partial.vertex(sem_src).is_instance())
        throw UserError("attribute vertex cannot be the source of a relation");
      if (s.partial.has_semantic_edge(sem_src, sem_dst, a.label))
        throw UserError("duplicate edge :" + a.label);
      s.partial.add_edge(s.focused, target, a.label, a.reverse);
      break;
    }
    case ActionKind::NewInstance:
    case ActionKind::NewAttribute: {
      if (a.content.empty()) throw UserError("new vertex without content");
      const bool instance = a.kind == ActionKind::NewInstance;
      if (!instance && a.reverse)
        throw UserError("attribute vertex cannot be the source of a relation");
      const int v = s.partial.add_vertex(instance ? VertexType::Instance : VertexType::Attribute,
                                         a.content, instance ? a.sense : std::nullopt,
                                         !instance && a.quoted);
      s.partial.add_edge(s.focused, v, a.label, a.reverse);
      s.produced.push_back(v);
      if (instance) s.focus_queue.push_back(v);
      break;
    }
  }
  ++s.step_count;
}

DecoderState apply(const DecoderState& state, const Action& action) {
  DecoderState next = state;
  apply_in_place(next, action);
  return next;
}

namespace {

struct ChildEdge {
  int edge;
  int other;
  std::string label;
  bool reverse;
};

}  // namespace

std::vector<StepRecord> linearize(const AmrGraph& graph,
                                  const std::map<std::string, int>& label_frequency,
                                  OrderMode mode, std::uint64_t seed) {
  graph.validate();
  std::mt19937_64 rng(seed);
  const int n = graph.size();
  std::vector<std::vector<int>> incident(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < graph.edges().size(); ++k) {
    incident[graph.edges()[k].src].push_back(static_cast<int>(k));
    incident[graph.edges()[k].dst].push_back(static_cast<int>(k));
  }
  auto freq = [&](const std::string& label) {
    auto it = label_frequency.find(label);
    return it == label_frequency.end() ? 0 : it->second;
  };

  std::vector<int> produced_index(n, -1), depth(n, 0);
  std::vector<char> expanded(n, 0), emitted(graph.edges().size(), 0);
  std::deque<int> queue;
  std::vector<StepRecord> steps;
  auto push = [&](int focus, Action a) {
    steps.push_back({static_cast<int>(steps.size()), focus, std::move(a)});
  };

  const Vertex& root = graph.vertex(graph.root());
  push(kBogVertex, Action::new_instance(root.content, root.sense, std::string(kRootSymbol), false));
  int next_index = 1;
  produced_index[graph.root()] = next_index++;
  queue.push_back(graph.root());
  push(kBogVertex, Action::stop());

  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    const int focus = produced_index[u];
    std::vector<ChildEdge> children;
    for (int k : incident[u]) {
      if (emitted[k]) continue;
      const Edge& e = graph.edges()[k];
      const int w = e.src == u ? e.dst : e.src;
      // A same-layer instance that is produced but not yet expanded takes
      // the edge when its own turn comes.
      if (produced_index[w] >= 0 && graph.vertex(w).is_instance() && !expanded[w] &&
          depth[w] == depth[u])
        continue;
      const bool reverse = e.semantic_src() != u;
      children.push_back({k, w, e.label, reverse});
    }
    if (mode == OrderMode::Deterministic) {
      std::sort(children.begin(), children.end(), [&](const ChildEdge& a, const ChildEdge& b) {
        const int fa = freq(a.label), fb = freq(b.label);
        if (fa != fb) return fa > fb;
        if (a.label != b.label) return a.label < b.label;
        if (a.reverse != b.reverse) return a.reverse < b.reverse;
        return a.other < b.other;
      });
    } else {
      std::shuffle(children.begin(), children.end(), rng);
    }
    for (const auto& c : children) {
      emitted[c.edge] = 1;
      const Vertex& w = graph.vertex(c.other);
      if (produced_index[c.other] >= 0) {
        push(focus, Action::connect(produced_index[c.other], c.label, c.reverse));
      } else if (w.is_instance()) {
        produced_index[c.other] = next_index++;
        depth[c.other] = depth[u] + 1;
        queue.push_back(c.other);
        push(focus, Action::new_instance(w.content, w.sense, c.label, c.reverse));
      } else {
        produced_index[c.other] = next_index++;
        depth[c.other] = depth[u] + 1;
        push(focus, Action::new_attribute(w.content, c.label, w.quoted));
      }
    }
    expanded[u] = 1;
    push(focus, Action::stop());
  }
  return steps;
}

std::vector<StepRecord> linearize(const AmrGraph& graph, const Vocabulary& vocab, OrderMode mode,
                                  std::uint64_t seed) {
  return linearize(graph, vocab.edge_label_frequency, mode, seed);
}

std::vector<Action> actions_of(const std::vector<StepRecord>& steps) {
  std::vector<Action> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.gold);
  return out;
}

std::vector<TraceStep> trace_of(const std::vector<StepRecord>& steps) {
  std::vector<TraceStep> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back({s.focus, s.gold});
  return out;
}

AmrGraph strip_bog(const DecoderState& s) {
  if (!s.terminal) throw UserError("action sequence does not reach a terminal state");
  const AmrGraph& p = s.partial;
  int root = -1, bog_edges = 0;
  for (const auto& e : p.edges()) {
    if (e.src == kBogVertex || e.dst == kBogVertex) {
      ++bog_edges;
      root = e.src == kBogVertex ? e.dst : e.src;
    }
  }
  if (bog_edges != 1)
    throw UserError("BOG vertex has " + std::to_string(bog_edges) + " children, expected 1");
  AmrGraph g;
  for (int v = 1; v < p.size(); ++v) {
    const Vertex& x = p.vertex(v);
    g.add_vertex(x.type, x.content, x.sense, x.quoted);
  }
  for (const auto& e : p.edges()) {
    if (e.src == kBogVertex || e.dst == kBogVertex) continue;
    g.add_edge(e.src - 1, e.dst - 1, e.label, e.reverse);
  }
  g.set_root(root - 1);
  return g;
}

AmrGraph reconstruct(const std::vector<Action>& actions) {
  DecoderState s = initial_state();
  for (const auto& a : actions) apply_in_place(s, a);
  return strip_bog(s);
}

bool is_breadth_first(const std::vector<TraceStep>& trace) {
  DecoderState s = initial_state();
  try {
    for (const auto& step : trace) {
      if (s.terminal || step.focus != s.focused) return false;
      apply_in_place(s, step.action);
    }
  } catch (const Error&) {
    return false;
  }
  return true;
}

namespace {

const char* kind_name(ActionKind k) {
  switch (k) {
    case ActionKind::NoMoreChildren: return "stop";
    case ActionKind::ConnectExisting: return "connect";
    case ActionKind::NewInstance: return "instance";
    case ActionKind::NewAttribute: return "attribute";
  }
  return "?";
}

}  // namespace

std::string trace_step_to_json(const TraceStep& step) {
  const Action& a = step.action;
  nlohmann::ordered_json j;
  j["focus"] = step.focus;
  j["action"] = kind_name(a.kind);
  if (a.kind == ActionKind::ConnectExisting) j["target"] = a.target;
  if (a.creates_vertex()) j["content"] = a.content;
  if (a.kind == ActionKind::NewInstance)
    j["sense"] = a.sense ? nlohmann::ordered_json(*a.sense) : nlohmann::ordered_json(nullptr);
  if (a.kind == ActionKind::NewAttribute) j["quoted"] = a.quoted;
  if (a.kind != ActionKind::NoMoreChildren) {
    j["label"] = a.label;
    j["reverse"] = a.reverse;
  }
  return j.dump();
}

TraceStep trace_step_from_json(const std::string& line) {
  try {
    auto j = nlohmann::json::parse(line);
    TraceStep step;
    step.focus = j.at("focus").get<int>();
    const auto kind = j.at("action").get<std::string>();
    Action& a = step.action;
    if (kind == "stop") {
      a.kind = ActionKind::NoMoreChildren;
      return step;
    }
    if (kind == "connect") {
      a.kind = ActionKind::ConnectExisting;
      a.target = j.at("target").get<int>();
    } else if (kind == "instance") {
      a.kind = ActionKind::NewInstance;
      a.content = j.at("content").get<std::vector<std::string>>();
      if (j.contains("sense") && !j.at("sense").is_null()) a.sense = j.at("sense").get<std::string>();
    } else if (kind == "attribute") {
      a.kind = ActionKind::NewAttribute;
      a.content = j.at("content").get<std::vector<std::string>>();
      a.quoted = j.value("quoted", false);
    } else {
      throw UserError("unknown action kind '" + kind + "'");
    }
    a.label = j.at("label").get<std::string>();
    a.reverse = j.value("reverse", false);
    return step;
  } catch (const nlohmann::json::exception& e) {
    throw UserError(std::string("malformed trace step: ") + e.what());
  }
}

}  // namespace bfamr
