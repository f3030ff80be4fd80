#include "caplet/flow.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <sstream>

namespace caplet {

namespace {

void collect_vars(const Expr& e, std::set<std::string>& out)
{
  if (e.kind == ExprKind::PlaceRead || e.kind == ExprKind::AddrOf)
    out.insert(e.place.base);
  for (const ExprPtr& a : e.args) collect_vars(*a, out);
}

// How a statement uses one particular variable; drives held-across demotion.
struct VarUse {
  bool mentioned = false;
  bool moved = false;        // passed/consumed by value (non-copy)
  bool mut_passed = false;   // &mut borrow or &mut receiver
  bool shared_passed = false;// & borrow or & receiver
  bool written = false;      // assignment target
};

class UseScanner {
public:
  UseScanner(const TypedProgram& prog) : prog_(prog) {}

  std::map<std::string, VarUse> scan(const Stmt& s)
  {
    uses_.clear();
    switch (s.kind) {
      case StmtKind::Let:
      case StmtKind::LetElse:
      case StmtKind::ExprStmt:
      case StmtKind::Return:
      case StmtKind::Assert:
      case StmtKind::If:
      case StmtKind::Match:
        if (s.expr) scan_expr(*s.expr, /*moved_context=*/consumes_value(s));
        break;
      case StmtKind::Assign:
        uses_[s.target.base].mentioned = true;
        uses_[s.target.base].written = true;
        scan_expr(*s.expr, true);
        break;
      case StmtKind::Drop:
        uses_[s.target.base].mentioned = true;
        uses_[s.target.base].moved = true;
        break;
    }
    return uses_;
  }

private:
  const TypedProgram& prog_;
  std::map<std::string, VarUse> uses_;

  static bool consumes_value(const Stmt& s)
  {
    return s.kind == StmtKind::Let || s.kind == StmtKind::LetElse
           || s.kind == StmtKind::Return || s.kind == StmtKind::Match;
  }

  void scan_expr(const Expr& e, bool moved_context)
  {
    switch (e.kind) {
      case ExprKind::PlaceRead: {
        VarUse& u = uses_[e.place.base];
        u.mentioned = true;
        if (moved_context && e.place.projs.empty() && !is_copy_type(e.type)) u.moved = true;
        return;
      }
      case ExprKind::AddrOf: {
        VarUse& u = uses_[e.place.base];
        u.mentioned = true;
        if (e.addr_mut) {
          u.mut_passed = true;
        } else {
          u.shared_passed = true;
        }
        return;
      }
      case ExprKind::Call: {
        const FunctionInstance* fi = prog_.find_function(e.resolved);
        for (size_t i = 0; i < e.args.size(); ++i) {
          bool by_value = !fi || i >= fi->params.size() || !fi->params[i].type.is_ref();
          scan_expr(*e.args[i], by_value);
        }
        return;
      }
      case ExprKind::Ctor:
        for (const ExprPtr& a : e.args) scan_expr(*a, true);
        return;
      default:
        for (const ExprPtr& a : e.args) scan_expr(*a, moved_context);
        return;
    }
  }
};

struct Scope {
  std::vector<std::string> declared;  // in declaration order
};

class FlowBuilder {
public:
  FlowBuilder(const FunctionInstance& fn, const TypedProgram& prog)
    : fn_(fn), prog_(prog), scanner_(prog)
  {}

  FlowResult run()
  {
    FlowResult out;
    graph_ = &out.graph;
    graph_->fn = &fn_;
    graph_->uses_thread_shared = uses_thread_shared();
    graph_->entry = new_point();
    graph_->exit = new_point();

    for (const Param& p : fn_.params) bind(p.name, p.type);
    Scope top;
    for (const Param& p : fn_.params) top.declared.push_back(p.name);

    int last = build_block(*fn_.body, graph_->entry, top);
    if (last >= 0) {
      end_scope(top, last, &last);
      add_plumbing(last, graph_->exit);
    }

    // Roots per point, discovered by walking edges from entry with the
    // per-point live environments computed during construction.
    out.roots = std::move(roots_);
    out.frame_sets = std::move(frame_sets_);
    out.seeds = std::move(seeds_);
    return out;
  }

private:
  const FunctionInstance& fn_;
  const TypedProgram& prog_;
  UseScanner scanner_;
  ProgramGraph* graph_ = nullptr;

  std::map<std::string, TypeExpr> var_types_;
  std::map<std::string, int> root_ids_;
  int next_root_id_ = 0;

  // Live environment while building: variables in scope and not yet
  // moved/dropped, plus active lexical borrows (borrower -> borrowed).
  struct LiveEnv {
    std::set<std::string> live;
    std::map<std::string, std::pair<std::string, bool>> borrows;  // r -> (x, mut)
  };
  LiveEnv env_;

  std::map<int, std::vector<RootPlace>> roots_;
  std::map<int, std::vector<RootPlace>> frame_sets_;
  std::map<int, std::vector<SeededRoot>> seeds_;

  bool uses_thread_shared()
  {
    for (const Param& p : fn_.params)
      if (type_uses_shared(p.type)) return true;
    bool found = false;
    if (fn_.body) {
      std::function<void(const std::vector<Stmt>&)> walk_block =
        [&](const std::vector<Stmt>& blk) {
          for (const Stmt& s : blk) {
            if (s.let_type && type_uses_shared(*s.let_type)) found = true;
            if (s.expr) walk_expr(*s.expr, found);
            walk_block(s.then_block);
            walk_block(s.else_block);
            for (const MatchArm& a : s.arms) walk_block(a.block);
          }
        };
      walk_block(*fn_.body);
    }
    return found;
  }

  void walk_expr(const Expr& e, bool& found)
  {
    if (type_uses_shared(e.type)) found = true;
    for (const ExprPtr& a : e.args) walk_expr(*a, found);
  }

  bool type_uses_shared(const TypeExpr& t)
  {
    if (t.kind == TypeKind::Named) {
      std::string key = type_key(t);
      const StructInstance* si = prog_.find_struct(key);
      if (si && si->thread_shared) return true;
    }
    for (const TypeExpr& a : t.args)
      if (type_uses_shared(a)) return true;
    return false;
  }

  int new_point()
  {
    int id = static_cast<int>(graph_->points.size());
    graph_->points.push_back({id});
    return id;
  }

  void bind(const std::string& name, const TypeExpr& type)
  {
    var_types_[name] = type;
    if (!root_ids_.count(name)) root_ids_[name] = next_root_id_++;
    env_.live.insert(name);
  }

  CfgEdge& add_edge(int from, int to, EdgeKind kind, FrameClass fc, Loc loc)
  {
    CfgEdge e;
    e.id = static_cast<int>(graph_->edges.size());
    e.from = from;
    e.to = to;
    e.kind = kind;
    e.frame_class = fc;
    e.loc = loc;
    graph_->edges.push_back(std::move(e));
    return graph_->edges.back();
  }

  void add_plumbing(int from, int to)
  {
    CfgEdge& e = add_edge(from, to, EdgeKind::Plumbing, FrameClass::Plumbing, Loc{});
    seed_edge(e, nullptr);
  }

  ExplicitKind explicit_kind(const std::string& var)
  {
    const TypeExpr& t = var_types_.at(var);
    if (t.kind == TypeKind::SharedRef) return ExplicitKind::ReadRef;
    if (t.kind == TypeKind::MutRef) return ExplicitKind::WriteRef;
    // Owned value; demoted while shared-borrowed.
    for (const auto& [r, target] : env_.borrows)
      if (target.first == var && !target.second && env_.live.count(r))
        return ExplicitKind::ReadRef;
    return ExplicitKind::WriteRef;
  }

  bool mut_borrowed(const std::string& var)
  {
    for (const auto& [r, target] : env_.borrows)
      if (target.first == var && target.second && env_.live.count(r)) return true;
    return false;
  }

  std::vector<RootPlace> current_roots()
  {
    std::vector<RootPlace> out;
    for (const auto& [var, id] : root_ids_) {
      if (!env_.live.count(var)) continue;
      if (mut_borrowed(var)) continue;  // capability moved to the borrower
      RootPlace r;
      r.root_id = id;
      r.var = var;
      r.kind = explicit_kind(var);
      r.type = var_types_.at(var);
      out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(),
              [](const RootPlace& a, const RootPlace& b) { return a.root_id < b.root_id; });
    return out;
  }

  void record_point(int id) { roots_[id] = current_roots(); }

  // Seeds the transition of `edge` from the pre-point roots and the
  // statement's usage. Also fills the frame set for statement edges.
  void seed_edge(CfgEdge& edge, const Stmt* stmt)
  {
    std::map<std::string, VarUse> uses;
    if (stmt) uses = scanner_.scan(*stmt);
    if (edge.cond) {
      // Branch edges use the condition expression.
      std::set<std::string> vars;
      collect_vars(*edge.cond, vars);
      for (const std::string& v : vars) uses[v].mentioned = true;
    }
    std::vector<RootPlace> pre = roots_.count(edge.from) ? roots_.at(edge.from)
                                                         : current_roots();
    std::vector<RootPlace> frame;
    std::vector<SeededRoot> seeds;
    for (const RootPlace& r : pre) {
      auto it = uses.find(r.var);
      const VarUse* u = it == uses.end() ? nullptr : &it->second;
      if (!u || !u->mentioned) {
        frame.push_back(r);
        seeds.push_back({r, r.kind, /*unused=*/true});
        continue;
      }
      if (u->moved || u->written || u->mut_passed) continue;  // not held across
      ExplicitKind held = r.kind;
      if (u->shared_passed && held == ExplicitKind::WriteRef)
        held = ExplicitKind::ReadRef;  // immutably available during the statement
      seeds.push_back({r, held, /*unused=*/false});
    }
    if (stmt || edge.kind == EdgeKind::Interference || edge.kind == EdgeKind::Branch)
      frame_sets_[edge.id] = frame;
    seeds_[edge.id] = std::move(seeds);
  }

  FrameClass classify(const Stmt& s)
  {
    bool pure_call = false;
    bool impure_call = false;
    std::function<void(const Expr&)> walk = [&](const Expr& e) {
      if (e.kind == ExprKind::Call) {
        const FunctionInstance* fi = prog_.find_function(e.resolved);
        if (fi && fi->purity == Purity::None) {
          impure_call = true;
        } else {
          pure_call = true;
        }
      }
      for (const ExprPtr& a : e.args) walk(*a);
    };
    if (s.expr) walk(*s.expr);
    if (s.kind == StmtKind::Drop) {
      // A drop with a contract behaves like an impure call.
      if (drop_contract(var_types_.at(s.target.base))) impure_call = true;
    }
    if (impure_call) return FrameClass::ImpureCall;
    if (pure_call) return FrameClass::PureCall;
    return FrameClass::NoopFrame;
  }

  const FunctionInstance* drop_contract(const TypeExpr& t)
  {
    if (t.kind != TypeKind::Named) return nullptr;
    return prog_.find_function(type_key(t) + "::drop");
  }

  // Inserts an interference no-op in front of a statement when the function
  // touches thread-shared state.
  int pre_interference(int at)
  {
    if (!graph_->uses_thread_shared) return at;
    record_point(at);
    int next = new_point();
    CfgEdge& e =
      add_edge(at, next, EdgeKind::Interference, FrameClass::Interference, Loc{});
    seed_edge(e, nullptr);
    return next;
  }

  void apply_moves(const Stmt& s)
  {
    std::map<std::string, VarUse> uses = scanner_.scan(s);
    for (const auto& [var, use] : uses) {
      if (use.moved && env_.live.count(var)) env_.live.erase(var);
    }
  }

  // Builds the block starting at point `at`; returns the live exit point or
  // -1 when all paths return.
  int build_block(const std::vector<Stmt>& blk, int at, Scope& scope)
  {
    for (const Stmt& s : blk) {
      if (at < 0) break;  // unreachable code after return; frontend keeps it out
      at = build_stmt(s, at, scope);
    }
    return at;
  }

  int build_stmt(const Stmt& s, int at, Scope& scope)
  {
    switch (s.kind) {
      case StmtKind::Let: {
        at = pre_interference(at);
        record_point(at);
        int next = new_point();
        CfgEdge& e = add_edge(at, next, EdgeKind::Statement, classify(s), s.loc);
        e.stmt = &s;
        seed_edge(e, &s);
        apply_moves(s);
        // Lexical borrow tracking: `let r = &x;`.
        if (s.expr->kind == ExprKind::AddrOf)
          env_.borrows[s.let_name] = {s.expr->place.base, s.expr->addr_mut};
        bind(s.let_name, s.expr->type);
        scope.declared.push_back(s.let_name);
        record_point(next);
        return next;
      }
      case StmtKind::Assign:
      case StmtKind::Assert:
      case StmtKind::ExprStmt:
      case StmtKind::Drop: {
        at = pre_interference(at);
        record_point(at);
        int next = new_point();
        CfgEdge& e = add_edge(at, next, EdgeKind::Statement, classify(s), s.loc);
        e.stmt = &s;
        seed_edge(e, &s);
        apply_moves(s);
        if (s.kind == StmtKind::Drop) env_.live.erase(s.target.base);
        record_point(next);
        return next;
      }
      case StmtKind::Return: {
        at = pre_interference(at);
        record_point(at);
        CfgEdge& e =
          add_edge(at, graph_->exit, EdgeKind::Statement, classify(s), s.loc);
        e.stmt = &s;
        seed_edge(e, &s);
        apply_moves(s);
        return -1;
      }
      case StmtKind::LetElse: {
        at = pre_interference(at);
        record_point(at);
        // The call/scrutinee evaluation is a statement edge to a fresh
        // point, from which the two variant assumptions branch.
        int evaluated = new_point();
        CfgEdge& eval = add_edge(at, evaluated, EdgeKind::Statement, classify(s), s.loc);
        eval.stmt = &s;
        seed_edge(eval, &s);
        apply_moves(s);
        record_point(evaluated);

        // Failure branch: assume the other variant, run the else block.
        LiveEnv saved = env_;
        int else_entry = new_point();
        CfgEdge& err = add_edge(evaluated, else_entry, EdgeKind::Branch,
                                FrameClass::NoopFrame, s.loc);
        err.stmt = &s;
        err.match_ctor = other_variant(s);
        err.cond_value = false;
        seed_edge(err, nullptr);
        record_point(else_entry);
        Scope else_scope;
        int else_exit = build_block(s.then_block, else_entry, else_scope);
        (void)else_exit;  // typeck guarantees the else block returns
        env_ = saved;

        // Success branch: bind the payload and continue.
        int ok_point = new_point();
        CfgEdge& ok = add_edge(evaluated, ok_point, EdgeKind::Branch,
                               FrameClass::NoopFrame, s.loc);
        ok.stmt = &s;
        ok.match_ctor = s.let_ctor;
        ok.match_binder = s.let_name;
        ok.cond_value = true;
        seed_edge(ok, nullptr);
        bind(s.let_name, binder_type(s));
        scope.declared.push_back(s.let_name);
        record_point(ok_point);
        return ok_point;
      }
      case StmtKind::If: {
        at = pre_interference(at);
        record_point(at);
        int then_entry = new_point();
        CfgEdge& te =
          add_edge(at, then_entry, EdgeKind::Branch, branch_class(*s.expr), s.loc);
        te.cond = s.expr.get();
        te.cond_value = true;
        seed_edge(te, nullptr);
        record_point(then_entry);
        LiveEnv saved = env_;
        Scope then_scope;
        int then_exit = build_block(s.then_block, then_entry, then_scope);
        if (then_exit >= 0) end_scope(then_scope, then_exit, &then_exit);
        LiveEnv then_env = env_;

        env_ = saved;
        int else_entry = new_point();
        CfgEdge& ee =
          add_edge(at, else_entry, EdgeKind::Branch, branch_class(*s.expr), s.loc);
        ee.cond = s.expr.get();
        ee.cond_value = false;
        seed_edge(ee, nullptr);
        record_point(else_entry);
        Scope else_scope;
        int else_exit = build_block(s.else_block, else_entry, else_scope);
        if (else_exit >= 0) end_scope(else_scope, else_exit, &else_exit);

        if (then_exit < 0 && else_exit < 0) return -1;
        // Join: keep variables that survived both incoming paths.
        LiveEnv else_env = env_;
        if (then_exit < 0) {
          env_ = else_env;
          int join = new_point();
          add_plumbing(else_exit, join);
          record_point(join);
          return join;
        }
        if (else_exit < 0) {
          env_ = then_env;
          int join = new_point();
          add_plumbing(then_exit, join);
          record_point(join);
          return join;
        }
        LiveEnv merged;
        for (const std::string& v : then_env.live)
          if (else_env.live.count(v)) merged.live.insert(v);
        merged.borrows = then_env.borrows;
        env_ = merged;
        int join = new_point();
        add_plumbing(then_exit, join);
        add_plumbing(else_exit, join);
        record_point(join);
        return join;
      }
      case StmtKind::Match: {
        at = pre_interference(at);
        record_point(at);
        int evaluated = new_point();
        CfgEdge& eval = add_edge(at, evaluated, EdgeKind::Statement, classify(s), s.loc);
        eval.stmt = &s;
        seed_edge(eval, &s);
        apply_moves(s);
        record_point(evaluated);

        LiveEnv saved = env_;
        std::vector<int> exits;
        std::vector<LiveEnv> envs;
        for (const MatchArm& arm : s.arms) {
          env_ = saved;
          int entry = new_point();
          CfgEdge& e =
            add_edge(evaluated, entry, EdgeKind::Branch, FrameClass::NoopFrame, arm.loc);
          e.stmt = &s;
          e.match_ctor = arm.ctor;
          e.match_binder = arm.binder;
          seed_edge(e, nullptr);
          if (arm.binder) bind(*arm.binder, arm_binder_type(s, arm));
          record_point(entry);
          Scope arm_scope;
          if (arm.binder) arm_scope.declared.push_back(*arm.binder);
          int exit = build_block(arm.block, entry, arm_scope);
          if (exit >= 0) {
            end_scope(arm_scope, exit, &exit);
            exits.push_back(exit);
            envs.push_back(env_);
          }
        }
        if (exits.empty()) return -1;
        LiveEnv merged = envs[0];
        for (size_t i = 1; i < envs.size(); ++i) {
          LiveEnv next;
          for (const std::string& v : merged.live)
            if (envs[i].live.count(v)) next.live.insert(v);
          next.borrows = merged.borrows;
          merged = next;
        }
        env_ = merged;
        int join = new_point();
        for (int x : exits) add_plumbing(x, join);
        record_point(join);
        return join;
      }
    }
    return at;
  }

  FrameClass branch_class(const Expr& cond)
  {
    bool pure_call = false;
    std::function<void(const Expr&)> walk = [&](const Expr& e) {
      if (e.kind == ExprKind::Call) pure_call = true;
      for (const ExprPtr& a : e.args) walk(*a);
    };
    walk(cond);
    return pure_call ? FrameClass::PureCall : FrameClass::NoopFrame;
  }

  std::string other_variant(const Stmt& s)
  {
    const TypeExpr& t = s.expr->type;
    const EnumInstance* ei = prog_.find_enum(type_key(t));
    if (!ei) return "_";
    for (const VariantDecl& v : ei->variants)
      if (v.name != s.let_ctor) return v.name;
    return "_";
  }

  TypeExpr binder_type(const Stmt& s)
  {
    const EnumInstance* ei = prog_.find_enum(type_key(s.expr->type));
    for (const VariantDecl& v : ei->variants)
      if (v.name == s.let_ctor && v.payload) return *v.payload;
    return type_unit();
  }

  TypeExpr arm_binder_type(const Stmt& s, const MatchArm& arm)
  {
    const EnumInstance* ei = prog_.find_enum(type_key(s.expr->type));
    for (const VariantDecl& v : ei->variants)
      if (v.name == arm.ctor && v.payload) return *v.payload;
    return type_unit();
  }

  // Ends the lexical scope: variables declared in it stop being live. This
  // is a plumbing edge (no time passes; no memory effects).
  void end_scope(const Scope& scope, int at, int* out)
  {
    if (scope.declared.empty()) {
      *out = at;
      return;
    }
    record_point(at);
    for (const std::string& v : scope.declared) {
      env_.live.erase(v);
      env_.borrows.erase(v);
    }
    int next = new_point();
    add_plumbing(at, next);
    record_point(next);
    *out = next;
  }
};

}  // namespace

std::set<std::string> mentioned_vars(const Stmt& s)
{
  std::set<std::string> out;
  if (s.expr) collect_vars(*s.expr, out);
  if (s.kind == StmtKind::Assign || s.kind == StmtKind::Drop) out.insert(s.target.base);
  return out;
}

FlowResult analyze_function(const FunctionInstance& fn, const TypedProgram& prog)
{
  assert(fn.body);
  FlowBuilder builder(fn, prog);
  FlowResult out = builder.run();
  // Root disjointness: whole-variable roots are prefix-free by construction,
  // but the check guards future projected roots.
  for (const auto& [point, roots] : out.roots) {
    std::vector<Place> places;
    for (const RootPlace& r : roots) {
      Place p;
      p.base = r.var;
      places.push_back(std::move(p));
    }
    std::string err = check_root_disjointness(places);
    if (!err.empty()) throw CapletError(fn.file, fn.loc, err);
  }
  return out;
}

std::string check_root_disjointness(const std::vector<Place>& roots)
{
  for (size_t i = 0; i < roots.size(); ++i) {
    for (size_t j = 0; j < roots.size(); ++j) {
      if (i == j) continue;
      const Place& a = roots[i];
      const Place& b = roots[j];
      if (a.base != b.base) continue;
      if (a.projs.size() <= b.projs.size()
          && std::equal(a.projs.begin(), a.projs.end(), b.projs.begin()))
        return "root places '" + a.str() + "' and '" + b.str()
               + "' overlap; roots must denote disjoint regions";
    }
  }
  return "";
}

std::string dump_roots_tsv(const FlowResult& flow)
{
  std::ostringstream os;
  os << "function\tpoint\troot_id\tplace\tkind\ttype\n";
  for (const auto& [point, roots] : flow.roots) {
    for (const RootPlace& r : roots) {
      os << flow.graph.fn->key << "\t" << point << "\t" << r.root_id << "\t" << r.var
         << "\t" << (r.kind == ExplicitKind::ReadRef ? "readRef" : "writeRef") << "\t"
         << type_key(r.type) << "\n";
    }
  }
  return os.str();
}

}  // namespace caplet
