// Flow analysis: CFG shape, lexical liveness, root places, frame sets and
// held-across capabilities.
#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>

#include "helpers.hpp"

using namespace caplet;

namespace {

FlowResult flow_of(const LoadedProgram& loaded, const std::string& key)
{
  const FunctionInstance* fn = loaded.typed.find_function(key);
  REQUIRE(fn);
  return analyze_function(*fn, loaded.typed);
}

std::vector<const CfgEdge*> statement_edges(const FlowResult& flow)
{
  std::vector<const CfgEdge*> out;
  for (const CfgEdge& e : flow.graph.edges)
    if (e.kind == EdgeKind::Statement) out.push_back(&e);
  return out;
}

const RootPlace* find_root(const std::vector<RootPlace>& roots, const std::string& var)
{
  for (const RootPlace& r : roots)
    if (r.var == var) return &r;
  return nullptr;
}

}  // namespace

TEST_CASE("cell_client is a linear chain of statement edges")
{
  LoadedProgram loaded = test::load_client("clients/cell_client.cap");
  FlowResult flow = flow_of(loaded, "cell_client");
  auto stmts = statement_edges(flow);
  REQUIRE(stmts.size() == 4);  // get, set, get, assert
  // Linear: each statement edge starts where the previous one ended.
  for (size_t i = 1; i < stmts.size(); ++i) CHECK(stmts[i]->from == stmts[i - 1]->to);
  // Acyclic: a DFS over the edges finds no back edge.
  std::map<int, std::vector<int>> succ;
  for (const CfgEdge& e : flow.graph.edges) succ[e.from].push_back(e.to);
  std::map<int, int> state;
  std::function<bool(int)> dfs = [&](int p) {
    state[p] = 1;
    for (int n : succ[p]) {
      if (state[n] == 1) return false;
      if (state[n] == 0 && !dfs(n)) return false;
    }
    state[p] = 2;
    return true;
  };
  CHECK(dfs(flow.graph.entry));
}

TEST_CASE("an if statement makes a diamond with one join")
{
  std::string text =
    "fn branchy(a: i32) -> i32 {\n"
    "    let r = 0;\n"
    "    if a == 1 { let b = a; } else { let c = a; }\n"
    "    return r;\n"
    "}\n";
  LoadedProgram loaded = test::load_snippet("branchy.cap", text);
  FlowResult flow = flow_of(loaded, "branchy");
  int branch_edges = 0;
  std::map<int, int> in_degree;
  for (const CfgEdge& e : flow.graph.edges) {
    if (e.kind == EdgeKind::Branch) ++branch_edges;
    in_degree[e.to]++;
  }
  CHECK(branch_edges == 2);
  int joins = 0;
  for (const auto& [point, deg] : in_degree)
    if (deg == 2) ++joins;
  CHECK(joins == 1);
}

TEST_CASE("an empty body has no statement edges and no roots at entry")
{
  std::string text = "fn nothing() { }\n";
  LoadedProgram loaded = test::load_snippet("nothing.cap", text);
  FlowResult flow = flow_of(loaded, "nothing");
  CHECK(statement_edges(flow).empty());
  CHECK(flow.roots[flow.graph.entry].empty());
}

TEST_CASE("a guard stays live across the unknown call and to the final assertion")
{
  LoadedProgram loaded = test::load_client("clients/refcell_client.cap");
  FlowResult flow = flow_of(loaded, "refcell_client");
  const CfgEdge* use_call = nullptr;
  const CfgEdge* last_assert = nullptr;
  for (const CfgEdge* e : statement_edges(flow)) {
    if (e->stmt->kind == StmtKind::ExprStmt) use_call = e;
    if (e->stmt->kind == StmtKind::Assert) last_assert = e;
  }
  REQUIRE(use_call);
  REQUIRE(last_assert);
  // `a` is live at the call though its last textual use was before it.
  const std::vector<RootPlace>& at_call = flow.roots[use_call->from];
  CHECK(find_root(at_call, "a"));
  // Before the final assertion x, a and y are all available.
  const std::vector<RootPlace>& at_assert = flow.roots[last_assert->from];
  const RootPlace* x = find_root(at_assert, "x");
  const RootPlace* a = find_root(at_assert, "a");
  const RootPlace* y = find_root(at_assert, "y");
  REQUIRE(x);
  REQUIRE(a);
  REQUIRE(y);
  CHECK(x->kind == ExplicitKind::ReadRef);
  CHECK(a->kind == ExplicitKind::WriteRef);
  CHECK(y->kind == ExplicitKind::WriteRef);
  CHECK(type_key(a->type) == "Ref<i32>");
  CHECK(type_key(y->type) == "RefMut<i32>");
}

TEST_CASE("an explicit drop ends liveness; scope end keeps it otherwise")
{
  std::string text =
    "fn probe(x: &Rc<i32>) {\n"
    "    let y = Rc::clone(x);\n"
    "    let z = Rc::clone(x);\n"
    "    drop(y);\n"
    "    let after = 1;\n"
    "}\n";
  LoadedProgram loaded = test::load_snippet("dropprobe.cap", text);
  FlowResult flow = flow_of(loaded, "probe");
  auto stmts = statement_edges(flow);
  const CfgEdge* last_let = stmts.back();
  REQUIRE(last_let->stmt->kind == StmtKind::Let);
  const std::vector<RootPlace>& roots = flow.roots[last_let->from];
  CHECK(find_root(roots, "y") == nullptr);  // dropped
  CHECK(find_root(roots, "z") != nullptr);  // lexically live to scope end
}

TEST_CASE("root kinds at the set statement of cell_client")
{
  LoadedProgram loaded = test::load_client("clients/cell_client.cap");
  FlowResult flow = flow_of(loaded, "cell_client");
  auto stmts = statement_edges(flow);
  const CfgEdge* set_edge = stmts[1];
  const std::vector<RootPlace>& roots = flow.roots[set_edge->from];
  REQUIRE(roots.size() == 2);
  const RootPlace* c = find_root(roots, "c");
  const RootPlace* before = find_root(roots, "before");
  REQUIRE(c);
  REQUIRE(before);
  CHECK(c->kind == ExplicitKind::ReadRef);
  CHECK(before->kind == ExplicitKind::WriteRef);
  // Both places occur in `c.set(before + 1)`: its frame set is empty.
  CHECK(flow.frame_sets[set_edge->id].empty());
}

TEST_CASE("unused roots of the unknown call exclude the passed argument")
{
  LoadedProgram loaded = test::load_client("clients/refcell_client.cap");
  FlowResult flow = flow_of(loaded, "refcell_client");
  const CfgEdge* use_call = nullptr;
  for (const CfgEdge* e : statement_edges(flow))
    if (e->stmt->kind == StmtKind::ExprStmt) use_call = e;
  REQUIRE(use_call);
  const std::vector<RootPlace>& unused = flow.frame_sets[use_call->id];
  CHECK(find_root(unused, "x") == nullptr);
  CHECK(find_root(unused, "a") != nullptr);
  CHECK(find_root(unused, "y") != nullptr);
}

TEST_CASE("frame sets never contain mentioned places (syntactic oracle over the corpus)")
{
  for (const char* client :
       {"clients/cell_client.cap", "clients/cell_two_calls.cap",
        "clients/refcell_client.cap", "clients/arc_client.cap", "clients/rc_client.cap",
        "clients/mutex_client.cap", "clients/atomic_client.cap",
        "clients/box_client.cap"}) {
    LoadedProgram loaded = test::load_client(client);
    for (const std::string& key : loaded.typed.verify_order) {
      FlowResult flow = flow_of(loaded, key);
      for (const CfgEdge& e : flow.graph.edges) {
        if (e.kind != EdgeKind::Statement || !flow.frame_sets.count(e.id)) continue;
        std::set<std::string> mentioned = mentioned_vars(*e.stmt);
        for (const RootPlace& r : flow.frame_sets[e.id])
          CHECK(mentioned.count(r.var) == 0);
      }
    }
  }
}

TEST_CASE("held-across capabilities: kept for shared use, gone after a move")
{
  LoadedProgram loaded = test::load_client("clients/arc_client.cap");
  FlowResult flow = flow_of(loaded, "arc_client");
  // Find the into_inner call edge: x is moved there, so x must not be
  // seeded across it nor rooted after it.
  const CfgEdge* move_edge = nullptr;
  for (const CfgEdge* e : statement_edges(flow)) {
    if (e->stmt->kind == StmtKind::Let && e->stmt->expr->kind == ExprKind::Call
        && e->stmt->expr->resolved == "Arc<i32>::into_inner") {
      move_edge = e;
      break;
    }
  }
  REQUIRE(move_edge);
  for (const SeededRoot& s : flow.seeds[move_edge->id]) CHECK(s.root.var != "x");
  CHECK(find_root(flow.roots[move_edge->to], "x") == nullptr);

  // cell_client: c is held across every statement.
  LoadedProgram cl = test::load_client("clients/cell_client.cap");
  FlowResult cf = flow_of(cl, "cell_client");
  for (const CfgEdge* e : statement_edges(cf)) {
    bool held = false;
    for (const SeededRoot& s : cf.seeds[e->id]) held = held || s.root.var == "c";
    CHECK(held);
  }
}

TEST_CASE("root ids are stable across consecutive points")
{
  LoadedProgram loaded = test::load_client("clients/cell_client.cap");
  FlowResult flow = flow_of(loaded, "cell_client");
  std::map<std::string, int> ids;
  for (const auto& [point, roots] : flow.roots) {
    for (const RootPlace& r : roots) {
      auto it = ids.find(r.var);
      if (it == ids.end()) {
        ids[r.var] = r.root_id;
      } else {
        CHECK(it->second == r.root_id);
      }
    }
  }
}

TEST_CASE("overlapping root places are rejected by the disjointness check")
{
  Place base;
  base.base = "x";
  Place field = base;
  field.projs.push_back({Projection::Field, "f"});
  CHECK(check_root_disjointness({base, field}) != "");
  Place other;
  other.base = "y";
  CHECK(check_root_disjointness({base, other}) == "");
}

TEST_CASE("the roots dump is a TSV table")
{
  LoadedProgram loaded = test::load_client("clients/cell_client.cap");
  FlowResult flow = flow_of(loaded, "cell_client");
  std::string tsv = dump_roots_tsv(flow);
  CHECK(tsv.find("function\tpoint\troot_id\tplace\tkind\ttype") == 0);
  CHECK(tsv.find("cell_client") != std::string::npos);
  CHECK(tsv.find("readRef") != std::string::npos);
}
