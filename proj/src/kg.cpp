#include "ctxf/kg.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

#include "ctxf/io.hpp"

namespace ctxf::kg {
namespace {

void check_id(const std::string& id, const std::string& what) {
  if (id.empty()) throw std::invalid_argument(what + " identifier is empty");
  for (char c : id)
    if (std::isspace(static_cast<unsigned char>(c)))
      throw std::invalid_argument(what + " identifier '" + id + "' contains whitespace");
}

char kind_char(TermKind k) { return k == TermKind::Class ? 'C' : 'I'; }

std::string term_str(const Term& t) { return std::string(1, kind_char(t.kind)) + ":" + t.id; }

}  // namespace

Term cls(std::string id) { return Term{TermKind::Class, std::move(id)}; }
Term ind(std::string id) { return Term{TermKind::Individual, std::move(id)}; }
Term prop(std::string id) { return Term{TermKind::Property, std::move(id)}; }

void KnowledgeGraph::set_classes(std::vector<std::string> names) {
  std::set<std::string> dedup;
  for (const std::string& n : names) {
    check_id(n, "class");
    if (!dedup.insert(n).second)
      throw std::invalid_argument("duplicate class '" + n + "' in class list");
  }
  class_list_ = std::move(names);
}

void KnowledgeGraph::add(const Term& head, const std::string& property, const Term& tail) {
  if (head.kind == TermKind::Property || tail.kind == TermKind::Property)
    throw std::invalid_argument("triple endpoint may not be a property term");
  check_id(head.id, "head");
  check_id(property, "property");
  check_id(tail.id, "tail");
  Triple t{head, prop(property), tail};
  if (seen_.insert(t).second) triples_.push_back(std::move(t));
}

std::vector<std::string> KnowledgeGraph::property_ids() const {
  std::set<std::string> ids;
  for (const Triple& t : triples_) ids.insert(t.relation.id);
  return {ids.begin(), ids.end()};
}

std::size_t KnowledgeGraph::count_terms(TermKind kind) const {
  std::set<std::string> ids;
  for (const Triple& t : triples_) {
    if (t.head.kind == kind) ids.insert(t.head.id);
    if (t.tail.kind == kind) ids.insert(t.tail.id);
    if (kind == TermKind::Property) ids.insert(t.relation.id);
  }
  return ids.size();
}

bool KnowledgeGraph::has_property(const std::string& id) const {
  for (const Triple& t : triples_)
    if (t.relation.id == id) return true;
  return false;
}

void KnowledgeGraph::validate() const {
  if (class_list_.empty()) throw std::runtime_error("knowledge graph declares no classes");
  for (const std::string& name : class_list_) {
    bool found = false;
    for (const Triple& t : triples_)
      if (t.head.kind == TermKind::Class && t.head.id == name) {
        found = true;
        break;
      }
    if (!found)
      throw std::runtime_error("class '" + name + "' does not appear as the head of any triple");
  }
}

// ---- .kgt parsing ---------------------------------------------------------------

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

Term parse_term(const std::string& field, const std::string& where) {
  if (field.size() < 3 || field[1] != ':')
    throw std::runtime_error(where + ": malformed term '" + field + "' (want kind:id)");
  std::string id = field.substr(2);
  switch (field[0]) {
    case 'C':
      return cls(id);
    case 'I':
      return ind(id);
    default:
      throw std::runtime_error(where + ": unknown term kind '" + std::string(1, field[0]) +
                               "' (want C or I)");
  }
}

}  // namespace

KnowledgeGraph parse_kgt(const std::string& text, const std::string& source_name) {
  KnowledgeGraph g;
  bool classes_seen = false;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string where = source_name + ":" + std::to_string(line_no);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields = split_tabs(line);
    if (fields[0] == "@classes") {
      if (classes_seen) throw std::runtime_error(where + ": duplicate @classes directive");
      if (fields.size() < 2) throw std::runtime_error(where + ": @classes directive names no classes");
      try {
        g.set_classes({fields.begin() + 1, fields.end()});
      } catch (const std::exception& e) {
        throw std::runtime_error(where + ": " + e.what());
      }
      classes_seen = true;
      continue;
    }
    if (!classes_seen)
      throw std::runtime_error(where + ": triple before the @classes directive");
    if (fields.size() != 3)
      throw std::runtime_error(where + ": expected 3 tab-separated fields, got " +
                               std::to_string(fields.size()));
    Term head = parse_term(fields[0], where);
    Term tail = parse_term(fields[2], where);
    try {
      g.add(head, fields[1], tail);
    } catch (const std::exception& e) {
      throw std::runtime_error(where + ": " + e.what());
    }
  }
  if (!classes_seen) throw std::runtime_error(source_name + ": missing @classes directive");
  g.validate();
  return g;
}

KnowledgeGraph load_kgt(const std::string& path) {
  return parse_kgt(io::read_text_file(path), path);
}

std::string serialize_kgt(const KnowledgeGraph& g) {
  std::string out = "@classes";
  for (const std::string& c : g.class_list()) out += "\t" + c;
  out += "\n";
  std::vector<Triple> sorted = g.triples();
  std::sort(sorted.begin(), sorted.end());
  for (const Triple& t : sorted)
    out += term_str(t.head) + "\t" + t.relation.id + "\t" + term_str(t.tail) + "\n";
  return out;
}

void save_kgt(const std::string& path, const KnowledgeGraph& g) {
  io::write_file(path, serialize_kgt(g));
}

// ---- views ---------------------------------------------------------------------

ViewSpec standard_view(const std::string& name, const KnowledgeGraph& g) {
  static const std::set<std::string> kVisual = {"hasBackground", "hasColor", "hasPart",
                                                "hasShape",      "hasSize",  "hasTexture",
                                                "hasCovering",   "hasLegCount"};
  static const std::set<std::string> kFunctional = {"hasMovement",       "hasSound",
                                                    "hasSpeed",          "hasWeight",
                                                    "hasTransportation", "hasDiet",
                                                    "hasHabitat"};
  ViewSpec spec;
  spec.name = name;
  if (name == "full") {
    for (const std::string& p : g.property_ids()) spec.predicates.insert(p);
    return spec;
  }
  const std::set<std::string>* family = nullptr;
  if (name == "visual") {
    family = &kVisual;
  } else if (name == "functional") {
    family = &kFunctional;
  } else if (name == "taxonomical") {
    static const std::set<std::string> kTax = {"type"};
    family = &kTax;
    spec.include_type_closure = true;
  } else {
    throw std::invalid_argument("unknown view '" + name +
                                "' (want visual, taxonomical, functional, or full)");
  }
  for (const std::string& p : *family)
    if (g.has_property(p)) spec.predicates.insert(p);
  if (spec.predicates.empty())
    throw std::runtime_error("view '" + name + "' matches no property of this graph");
  return spec;
}

ViewSubgraph extract_view(const KnowledgeGraph& g, const ViewSpec& spec) {
  bool full = spec.name == "full";
  if (!full) {
    for (const std::string& p : spec.predicates)
      if (!g.has_property(p))
        throw std::invalid_argument("view '" + spec.name + "' requires property '" + p +
                                    "' absent from the graph");
  }
  std::set<Triple> selected;
  for (const Triple& t : g.triples())
    if (full || spec.predicates.count(t.relation.id)) selected.insert(t);

  std::set<Term> nodes;
  for (const std::string& c : g.class_list()) nodes.insert(cls(c));
  for (const Triple& t : selected) {
    nodes.insert(t.head);
    nodes.insert(t.tail);
  }
  if (spec.include_type_closure) {
    bool grew = true;
    while (grew) {
      grew = false;
      for (const Triple& t : g.triples()) {
        if (t.relation.id != "type" || selected.count(t) || !nodes.count(t.head)) continue;
        selected.insert(t);
        nodes.insert(t.tail);
        grew = true;
      }
    }
  }
  if (selected.empty())
    throw std::runtime_error("view '" + spec.name + "' selects no triples");

  ViewSubgraph s;
  s.view_name = spec.name;
  s.class_names = g.class_list();
  s.triples.assign(selected.begin(), selected.end());
  // Dataset classes occupy indices 0..C-1 in class_list order across every
  // view; remaining nodes follow in sorted order.
  for (const std::string& c : g.class_list()) s.nodes.push_back(cls(c));
  std::set<Term> rest = nodes;
  for (const std::string& c : g.class_list()) rest.erase(cls(c));
  for (const Term& t : rest) s.nodes.push_back(t);
  for (std::size_t i = 0; i < s.nodes.size(); ++i)
    s.node_index[s.nodes[i]] = static_cast<int>(i);
  return s;
}

AdjacencyData to_adjacency(const ViewSubgraph& s) {
  if (s.nodes.empty()) throw std::invalid_argument("empty view subgraph");
  int n = s.n_nodes();
  std::vector<float> adj(static_cast<std::size_t>(n) * n, 0.0f);
  for (const Triple& t : s.triples) {
    int i = s.node_index.at(t.head);
    int j = s.node_index.at(t.tail);
    if (i == j) continue;  // adjacency keeps a zero diagonal
    adj[static_cast<std::size_t>(i) * n + j] = 1.0f;
    adj[static_cast<std::size_t>(j) * n + i] = 1.0f;
  }
  std::vector<float> eye(static_cast<std::size_t>(n) * n, 0.0f);
  for (int i = 0; i < n; ++i) eye[static_cast<std::size_t>(i) * n + i] = 1.0f;
  AdjacencyData out;
  out.adjacency = Tensor::from_data({n, n}, std::move(adj));
  out.features = Tensor::from_data({n, n}, std::move(eye));
  return out;
}

}  // namespace ctxf::kg
