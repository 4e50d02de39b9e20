#include "bfamr/model.hpp"

#include "bfamr/checkpoint.hpp"
#include "bfamr/error.hpp"
#include "bfamr/kv.hpp"

namespace bfamr {

namespace {

std::string layer_name(const char* prefix, int i) {
  return std::string(prefix) + std::to_string(i);
}

}  // namespace

void ModelConfig::validate() const {
  auto positive = [](const char* name, int v) {
    if (v < 1) throw UserError(std::string(name) + " must be at least 1");
  };
  positive("graph_hidden", graph_hidden);
  positive("refinement_emb", refinement_emb);
  positive("contextual_dim", contextual_dim);
  positive("sent_layers", sent_layers);
  positive("graph_layers", graph_layers);
  positive("interact_layers", interact_layers);
  positive("ffn_hidden", ffn_hidden);
  positive("heads", heads);
  if (graph_hidden % heads != 0)
    throw UserError("graph_hidden " + std::to_string(graph_hidden) + " is not divisible by heads " +
                    std::to_string(heads));
  if (dropout < 0.0 || dropout >= 1.0) throw UserError("dropout must be in [0, 1)");
  if (embedder != "stub" && embedder != "file")
    throw UserError("embedder must be 'stub' or 'file', got '" + embedder + "'");
  if (embedder == "file" && embedder_path.empty())
    throw UserError("embedder = file needs embedder_path");
}

std::map<std::string, std::string> ModelConfig::to_map() const {
  return {{"graph_hidden", std::to_string(graph_hidden)},
          {"refinement_emb", std::to_string(refinement_emb)},
          {"contextual_dim", std::to_string(contextual_dim)},
          {"sent_layers", std::to_string(sent_layers)},
          {"graph_layers", std::to_string(graph_layers)},
          {"interact_layers", std::to_string(interact_layers)},
          {"ffn_hidden", std::to_string(ffn_hidden)},
          {"heads", std::to_string(heads)},
          {"dropout", std::to_string(dropout)},
          {"use_edges", use_edges ? "true" : "false"},
          {"embedder", embedder},
          {"embedder_seed", std::to_string(embedder_seed)},
          {"embedder_path", embedder_path}};
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "graph_hidden") c.graph_hidden = parse_int(k, v);
    else if (k == "refinement_emb") c.refinement_emb = parse_int(k, v);
    else if (k == "contextual_dim") c.contextual_dim = parse_int(k, v);
    else if (k == "sent_layers") c.sent_layers = parse_int(k, v);
    else if (k == "graph_layers") c.graph_layers = parse_int(k, v);
    else if (k == "interact_layers") c.interact_layers = parse_int(k, v);
    else if (k == "ffn_hidden") c.ffn_hidden = parse_int(k, v);
    else if (k == "heads") c.heads = parse_int(k, v);
    else if (k == "dropout") c.dropout = parse_double(k, v);
    else if (k == "use_edges") c.use_edges = parse_bool(k, v);
    else if (k == "embedder") c.embedder = v;
    else if (k == "embedder_seed") c.embedder_seed = parse_uint64(k, v);
    else if (k == "embedder_path") c.embedder_path = v;
    else throw UserError("unknown model config key '" + k + "'");
  }
  return c;
}

std::map<std::string, double> content_distribution(const StepDistributions& d,
                                                   const Vocabulary& vocab,
                                                   const AnnotatedSentence& sentence,
                                                   bool attribute) {
  const Tensor& phase = attribute ? d.attribute_phase : d.instance_phase;
  const Tensor& fresh = attribute ? d.attribute_new : d.instance_new;
  const Tensor& copy = attribute ? d.token_copy : d.lemma_copy;
  std::map<std::string, double> out;
  for (int i = 0; i < vocab.content.size(); ++i)
    out[vocab.content.symbol(i)] += static_cast<double>(phase[0] * fresh[i]);
  for (int i = 0; i < sentence.size(); ++i) {
    const std::string& unit = attribute ? sentence[i].token : sentence[i].lemma;
    out[unit] += static_cast<double>(phase[1] * copy[i]);
  }
  return out;
}

StepDistributions StepOutput::values() const {
  return {status.value(),     existing.value(),   inst_phase.value(), inst_new.value(),
          lemma_copy.value(), attr_phase.value(), attr_new.value(),   token_copy.value()};
}

Model::Model(ModelConfig config, Vocabulary vocab, std::uint64_t seed,
             std::shared_ptr<const ContextualEmbedder> embedder)
    : config_(std::move(config)), vocab_(std::move(vocab)), params_(seed) {
  config_.validate();
  embedder_ = embedder ? std::move(embedder)
                       : make_embedder(config_.embedder, config_.contextual_dim,
                                       config_.embedder_seed, config_.embedder_path);
  if (embedder_->dim() != config_.contextual_dim)
    throw UserError("embedder dimension " + std::to_string(embedder_->dim()) +
                    " does not match contextual_dim " + std::to_string(config_.contextual_dim));
  build();
}

void Model::build() {
  const int g = config_.graph_hidden, e = config_.refinement_emb, b = config_.contextual_dim;
  const int f = config_.ffn_hidden, h = config_.heads;
  ParamStore& ps = params_;

  bert_proj_ = Linear::create(ps, "embed.bert_proj", b, e, false);
  refine_ = Embedding::create(ps, "embed.refine", vocab_.word.size(), e);
  word_out_ = Linear::create(ps, "embed.out", e, g, false);

  pos_ = Embedding::create(ps, "sent.pos", vocab_.pos.size(), g);
  ner_ = Embedding::create(ps, "sent.ner", vocab_.ner.size(), g);
  sent_proj_ = Linear::create(ps, "sent.proj", 4 * g + b, g);
  sent_start_ = &ps.create("sent.start", 1, g, Init::Embedding);
  for (int i = 0; i < config_.sent_layers; ++i) {
    const std::string n = layer_name("sent.layer", i);
    sent_layers_.push_back({MultiHeadAttention::create(ps, n + ".attn", g, h),
                            LayerNorm::create(ps, n + ".ln_attn", g),
                            FeedForward::create(ps, n + ".ffn", g, f),
                            LayerNorm::create(ps, n + ".ln_ffn", g)});
  }

  edge_label_ = Embedding::create(ps, "graph.edge_label", vocab_.edge_label.size(), g);
  edge_reverse_ = Embedding::create(ps, "graph.edge_reverse", 2, g);
  for (int i = 0; i < config_.graph_layers; ++i) {
    const std::string n = layer_name("graph.layer", i);
    GraphLayer l;
    l.vertex_w = &ps.create(n + ".vertex_W", g, g, Init::Xavier);
    l.edge_w = &ps.create(n + ".edge_W", g, g, Init::Xavier);
    l.ln_msg = LayerNorm::create(ps, n + ".ln_msg", g);
    l.ffn = FeedForward::create(ps, n + ".ffn", g, f);
    l.ln_ffn = LayerNorm::create(ps, n + ".ln_ffn", g);
    graph_layers_.push_back(l);
  }
  graph_start_ = &ps.create("graph.start", 1, g, Init::Embedding);

  for (int i = 0; i < config_.interact_layers; ++i) {
    const std::string n = layer_name("interact.layer", i);
    InteractLayer l;
    l.graph_cross = MultiHeadAttention::create(ps, n + ".graph_cross", g, h);
    l.graph_ln0 = LayerNorm::create(ps, n + ".graph_ln0", g);
    l.graph_self = MultiHeadAttention::create(ps, n + ".graph_self", g, h);
    l.graph_ln1 = LayerNorm::create(ps, n + ".graph_ln1", g);
    l.graph_ffn = FeedForward::create(ps, n + ".graph_ffn", g, f);
    l.graph_ln2 = LayerNorm::create(ps, n + ".graph_ln2", g);
    l.sent_cross = MultiHeadAttention::create(ps, n + ".sent_cross", g, h);
    l.sent_ln0 = LayerNorm::create(ps, n + ".sent_ln0", g);
    l.sent_ln1 = LayerNorm::create(ps, n + ".sent_ln1", g);
    l.sent_self = MultiHeadAttention::create(ps, n + ".sent_self", g, h);
    l.sent_ln2 = LayerNorm::create(ps, n + ".sent_ln2", g);
    l.sent_ffn = FeedForward::create(ps, n + ".sent_ffn", g, f);
    l.sent_ln3 = LayerNorm::create(ps, n + ".sent_ln3", g);
    interact_layers_.push_back(l);
  }

  status_ = Linear::create(ps, "head.status", g, 4);
  existing_query_ = Linear::create(ps, "head.existing_query", g, g, false);
  existing_key_ = Linear::create(ps, "head.existing_key", g, g, false);
  conc_ = Linear::create(ps, "head.conc", g, g, false);
  attr_ = Linear::create(ps, "head.attr", g, g, false);
  phase_ = Linear::create(ps, "head.phase", g, 2);
  new_content_ = Linear::create(ps, "head.new_content", g, vocab_.content.size());
  sense_ = Linear::create(ps, "head.sense", 2 * g, vocab_.sense.size());
  edge_label_head_ = Linear::create(ps, "head.edge_label", 2 * g, vocab_.edge_label.size());
  reverse_label_ = Embedding::create(ps, "head.reverse_label", vocab_.edge_label.size(), g);
  edge_reverse_head_ = Linear::create(ps, "head.edge_reverse", 3 * g, 2);
}

void Model::save(const std::filesystem::path& dir) const {
  save_checkpoint(dir, params_, config_.to_map(), vocab_);
}

std::unique_ptr<Model> Model::load(const std::filesystem::path& dir) {
  Checkpoint ck = load_checkpoint(dir);
  auto model = std::make_unique<Model>(ModelConfig::from_map(ck.config), std::move(ck.vocab), 0);
  restore_parameters(model->params_, ck.tensors);
  return model;
}

ForwardPass::ForwardPass(const Model& model, Tape& tape, const AnnotatedSentence& sentence,
                         std::mt19937_64* dropout_rng)
    : model_(model), tape_(tape), sentence_(sentence), rng_(dropout_rng) {
  const int m = sentence.size();
  if (m < 1) throw UserError("cannot encode an empty sentence");
  const Vocabulary& vocab = model.vocab_;
  std::vector<std::string> tokens, lemmas;
  std::vector<int> pos, ner;
  for (const auto& t : sentence.tokens) {
    tokens.push_back(t.token);
    lemmas.push_back(t.lemma);
    pos.push_back(vocab.pos.id_or_unk(t.pos));
    ner.push_back(vocab.ner.id_or_unk(t.ner));
  }
  tokens_ = bert_based_embed_rows(tokens);
  lemmas_ = bert_based_embed_rows(lemmas);
  Var contextual = tape.constant(model.embedder_->encode_sentence(tokens));
  const Var parts[] = {lemmas_, tokens_, model.pos_(tape, pos), model.ner_(tape, ner), contextual};
  Var projected = model.sent_proj_(tape, ag::concat_cols(parts));
  const Var rows[] = {tape.param(*model.sent_start_), projected};
  embedded_ = ag::concat_rows(rows);
  Var x = maybe_dropout(embedded_);
  for (const auto& layer : model.sent_layers_) x = encoder_layer(layer, x);
  encoded_ = x;
}

Var ForwardPass::maybe_dropout(Var x) {
  if (!rng_ || model_.config_.dropout <= 0.0) return x;
  return ag::dropout(x, static_cast<Real>(model_.config_.dropout), *rng_);
}

Var ForwardPass::encoder_layer(const Model::EncoderLayer& layer, Var x) {
  x = layer.ln_attn(tape_, ag::add(x, maybe_dropout(layer.attn(tape_, x, x))));
  return layer.ln_ffn(tape_, ag::add(x, maybe_dropout(layer.ffn(tape_, x))));
}

Var ForwardPass::bert_based_embed_rows(const std::vector<std::string>& units) {
  const ContextualEmbedder& emb = *model_.embedder_;
  Tensor bert(static_cast<int>(units.size()), emb.dim());
  std::vector<int> ids;
  for (std::size_t i = 0; i < units.size(); ++i) {
    const Tensor v = emb.unit_vector(units[i]);
    std::copy(v.data(), v.data() + v.size(), bert.row(static_cast<int>(i)).begin());
    ids.push_back(model_.vocab_.word.id_or_unk(units[i]));
  }
  Var inner = ag::add(model_.bert_proj_(tape_, tape_.constant(std::move(bert))),
                      model_.refine_(tape_, ids));
  return model_.word_out_(tape_, ag::relu(inner));
}

Var ForwardPass::bert_based_embed(const std::string& unit) {
  auto it = unit_cache_.find(unit);
  if (it != unit_cache_.end()) return it->second;
  Var v = bert_based_embed_rows({unit});
  unit_cache_.emplace(unit, v);
  return v;
}

Var ForwardPass::embed_edge(int label_id, bool reverse) {
  return ag::add(model_.edge_label_(tape_, label_id), model_.edge_reverse_(tape_, reverse ? 1 : 0));
}

Var ForwardPass::encode_graph(const AmrGraph& partial) {
  const int t = partial.size();
  if (t < 1) throw UserError("cannot encode an empty partial graph");
  std::vector<Var> rows;
  for (const auto& v : partial.vertices()) rows.push_back(embed_vertex(v));
  Var x = ag::concat_rows(rows);

  const NeighbourSet ns = neighbour_sets(partial);
  Tensor adjacency(t, t);
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(t));
  std::vector<int> label_ids, reverse_ids;
  for (int i = 0; i < t; ++i) {
    const auto& list = ns[static_cast<std::size_t>(i)];
    for (const auto& n : list) {
      adjacency(i, n.vertex) += Real(1) / static_cast<Real>(list.size());
      groups[static_cast<std::size_t>(i)].push_back(static_cast<int>(label_ids.size()));
      label_ids.push_back(model_.vocab_.edge_label.id_or_unk(n.label));
      reverse_ids.push_back(n.reverse ? 1 : 0);
    }
  }
  Var adj = tape_.constant(std::move(adjacency));
  Var edges;
  if (model_.config_.use_edges && !label_ids.empty()) {
    Var per_edge = ag::add(model_.edge_label_(tape_, label_ids),
                           model_.edge_reverse_(tape_, reverse_ids));
    edges = ag::segment_mean(per_edge, groups);
  }
  for (const auto& layer : model_.graph_layers_) {
    Var s = ag::add(x, ag::linear(ag::matmul(adj, x), tape_.param(*layer.vertex_w)));
    if (edges.valid()) s = ag::add(s, ag::linear(edges, tape_.param(*layer.edge_w)));
    Var x0 = layer.ln_msg(tape_, s);
    x = layer.ln_ffn(tape_, ag::add(x0, maybe_dropout(layer.ffn(tape_, x0))));
  }
  return x;
}

std::pair<Var, Var> ForwardPass::interact(Var graph_encoding, int focused) {
  const int t = graph_encoding.rows();
  if (focused < 0 || focused >= t)
    throw UserError("focused vertex " + std::to_string(focused) + " outside the partial graph");
  Var focus = ag::slice_rows(graph_encoding, focused, 1);
  const Var start[] = {tape_.param(*model_.graph_start_), graph_encoding};
  Var g = ag::concat_rows(start);
  Var h = encoded_;
  for (const auto& l : model_.interact_layers_) {
    Var g0 = l.graph_ln0(tape_, ag::add(g, maybe_dropout(l.graph_cross(tape_, g, h))));
    Var g1 = l.graph_ln1(tape_, ag::add(g0, maybe_dropout(l.graph_self(tape_, g0, g0))));
    g = l.graph_ln2(tape_, ag::add(g1, maybe_dropout(l.graph_ffn(tape_, g1))));
    Var h0 = l.sent_ln0(tape_, ag::add(h, maybe_dropout(l.sent_cross(tape_, h, g))));
    Var h1 = l.sent_ln1(tape_, ag::add_row(h0, focus));
    Var h2 = l.sent_ln2(tape_, ag::add(h1, maybe_dropout(l.sent_self(tape_, h1, h1))));
    h = l.sent_ln3(tape_, ag::add(h2, maybe_dropout(l.sent_ffn(tape_, h2))));
  }
  return {ag::slice_rows(h, 0, 1), ag::slice_rows(g, 1, t)};
}

StepOutput ForwardPass::step(const DecoderState& state) {
  StepOutput out;
  out.graph = encode_graph(state.partial);
  std::tie(out.hp, out.gp) = interact(out.graph, state.focused);
  const Model& m = model_;
  Var hp = out.hp;
  out.status = ag::softmax(m.status_(tape_, hp));
  out.existing =
      ag::softmax(ag::matmul_nt(m.existing_query_(tape_, hp), m.existing_key_(tape_, out.gp)));
  out.inst_hidden = ag::add(hp, ag::relu(m.conc_(tape_, hp)));
  out.inst_phase = ag::softmax(m.phase_(tape_, out.inst_hidden));
  out.inst_new = ag::softmax(m.new_content_(tape_, out.inst_hidden));
  out.lemma_copy = ag::softmax(ag::matmul_nt(out.inst_hidden, lemmas_));
  out.attr_hidden = ag::add(hp, ag::relu(m.attr_(tape_, hp)));
  out.attr_phase = ag::softmax(m.phase_(tape_, out.attr_hidden));
  out.attr_new = ag::softmax(m.new_content_(tape_, out.attr_hidden));
  out.token_copy = ag::softmax(ag::matmul_nt(out.attr_hidden, tokens_));
  return out;
}

Var ForwardPass::sense(const StepOutput& out, const std::string& content_unit) {
  const Var parts[] = {out.inst_hidden, bert_based_embed(content_unit)};
  return ag::softmax(model_.sense_(tape_, ag::concat_cols(parts)));
}

Var ForwardPass::edge_label(const StepOutput& out, Var vertex_vector) {
  const Var parts[] = {out.hp, vertex_vector};
  return ag::softmax(model_.edge_label_head_(tape_, ag::concat_cols(parts)));
}

Var ForwardPass::edge_reverse(const StepOutput& out, Var vertex_vector, int label_id) {
  const Var parts[] = {out.hp, vertex_vector, model_.reverse_label_(tape_, label_id)};
  return ag::softmax(model_.edge_reverse_head_(tape_, ag::concat_cols(parts)));
}

Var ForwardPass::mixture(Var phase, Var new_dist, Var copy_dist, int content_id,
                         const std::vector<int>& copy_positions) {
  Var p = ag::mul(ag::pick(phase, 0), ag::pick(new_dist, content_id));
  if (!copy_positions.empty())
    p = ag::add(p, ag::mul(ag::pick(phase, 1), ag::sum_entries(copy_dist, copy_positions)));
  return p;
}

Var ForwardPass::step_loss(const DecoderState& state, const Action& gold) {
  const Vocabulary& vocab = model_.vocab_;
  StepOutput out = step(state);
  std::vector<Var> terms{ag::cross_entropy(out.status, gold.status())};
  if (gold.kind == ActionKind::NoMoreChildren) return terms[0];

  Var vertex;
  if (gold.kind == ActionKind::ConnectExisting) {
    const int row = state.produced.at(static_cast<std::size_t>(gold.target));
    terms.push_back(ag::cross_entropy(out.existing, row));
    vertex = ag::slice_rows(out.gp, row, 1);
  } else {
    std::string unit;
    for (const auto& w : gold.content) unit += (unit.empty() ? "" : " ") + w;
    const bool attribute = gold.kind == ActionKind::NewAttribute;
    std::vector<int> positions;
    for (int i = 0; i < sentence_.size(); ++i) {
      const std::string& source = attribute ? sentence_[i].token : sentence_[i].lemma;
      if (source == unit) positions.push_back(i);
    }
    const int cid = vocab.content.id_or_unk(unit);
    if (attribute) {
      terms.push_back(ag::neg_log(mixture(out.attr_phase, out.attr_new, out.token_copy, cid, positions)));
    } else {
      terms.push_back(ag::neg_log(mixture(out.inst_phase, out.inst_new, out.lemma_copy, cid, positions)));
      const auto sid = vocab.sense.find(gold.sense.value_or(std::string(kNoSense)));
      terms.push_back(ag::cross_entropy(sense(out, unit), sid ? *sid : vocab.no_sense_id()));
    }
    vertex = bert_based_embed(unit);
  }
  const int lid = vocab.edge_label.id_or_unk(gold.label);
  terms.push_back(ag::cross_entropy(edge_label(out, vertex), lid));
  terms.push_back(ag::cross_entropy(edge_reverse(out, vertex, lid), gold.reverse ? 1 : 0));
  return ag::add_n(terms);
}

void ForwardPass::rewind(std::size_t mark) {
  tape_.truncate(mark);
  for (auto it = unit_cache_.begin(); it != unit_cache_.end();) {
    if (static_cast<std::size_t>(it->second.id()) >= mark)
      it = unit_cache_.erase(it);
    else
      ++it;
  }
}

}  // namespace bfamr
