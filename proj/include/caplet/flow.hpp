// Per-function control-flow graphs, lexical liveness, root places and frame
// sets. Liveness is lexical: a variable lives from its declaration to an
// explicit drop, a move, or the end of its declaring scope, so capabilities
// needed by later proof steps stay available without any heuristic.
#ifndef CAPLET_FLOW_HPP
#define CAPLET_FLOW_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "caplet/capability.hpp"
#include "caplet/typeck.hpp"

namespace caplet {

enum class EdgeKind {
  Statement,     // carries a statement
  Branch,        // if/match condition assumption (no memory effects)
  Interference,  // possible action of other threads (no-op for this thread)
  Plumbing,      // joins, scope ends, pure version glue
};

// Classification that selects the framing rules for a transition.
enum class FrameClass {
  NoopFrame,    // assignments of pure expressions, asserts, drops of plain data
  PureCall,     // statements whose evaluation calls pure functions
  ImpureCall,   // calls of non-pure functions (incl. drops with contracts)
  Interference, // interference no-ops
  Plumbing,     // version bookkeeping only; frames everything
};

struct CfgEdge {
  int id = 0;
  int from = 0;
  int to = 0;
  EdgeKind kind = EdgeKind::Plumbing;
  FrameClass frame_class = FrameClass::Plumbing;
  const Stmt* stmt = nullptr;      // Statement edges
  const Expr* cond = nullptr;      // Branch edges: the condition
  bool cond_value = true;          // Branch edges: assumed polarity
  std::string match_ctor;          // Branch edges from match/let-else
  std::optional<std::string> match_binder;
  Loc loc;
};

struct ProgramPoint {
  int id = 0;
};

struct ProgramGraph {
  const FunctionInstance* fn = nullptr;
  int entry = 0;
  int exit = 0;
  std::vector<ProgramPoint> points;
  std::vector<CfgEdge> edges;
  bool uses_thread_shared = false;
};

enum class ExplicitKind { ReadRef, WriteRef };

struct RootPlace {
  int root_id = 0;       // stable per variable within the function
  std::string var;
  ExplicitKind kind = ExplicitKind::WriteRef;
  TypeExpr type;
};

struct SeededRoot {
  RootPlace root;
  ExplicitKind held_kind = ExplicitKind::WriteRef;  // possibly demoted
  bool unused = false;  // member of the statement's frame set
};

struct FlowResult {
  ProgramGraph graph;
  // Live variables per point, in root-id order.
  std::map<int, std::vector<RootPlace>> roots;
  // Per statement-edge id: roots not mentioned by the statement.
  std::map<int, std::vector<RootPlace>> frame_sets;
  // Per edge id: roots whose capabilities hold across the transition.
  std::map<int, std::vector<SeededRoot>> seeds;
};

// Variables syntactically mentioned by a statement (reads, writes, borrows,
// call arguments, drop targets).
std::set<std::string> mentioned_vars(const Stmt& s);

FlowResult analyze_function(const FunctionInstance& fn, const TypedProgram& prog);

// Rejects root sets in which one root place is a prefix of another (they
// would not denote disjoint regions). Returns an error message or empty.
std::string check_root_disjointness(const std::vector<Place>& roots);

// TSV rendering of the per-point root table (--dump-roots).
std::string dump_roots_tsv(const FlowResult& flow);

}  // namespace caplet

#endif
