#include "caplet/purity.hpp"

#include <algorithm>
#include <functional>

namespace caplet {

namespace {

int level_rank(Purity p)
{
  switch (p) {
    case Purity::Value: return 0;
    case Purity::Memory: return 1;
    case Purity::Unstable: return 2;
    case Purity::None: return 3;
  }
  return 3;
}

class BodyChecker {
public:
  BodyChecker(const FunctionInstance& fn, Purity level, const TypedProgram& prog,
              std::vector<Violation>& out)
    : fn_(fn), level_(level), prog_(prog), out_(out)
  {}

  void run()
  {
    for (const Param& p : fn_.params) {
      if (!is_copy_type(p.type))
        report('a', p.loc, "parameter '" + p.name + "' of pure function '" + fn_.key
                             + "' has non-copy type " + type_key(p.type));
    }
    if (fn_.body) check_block(*fn_.body);
  }

private:
  const FunctionInstance& fn_;
  Purity level_;
  const TypedProgram& prog_;
  std::vector<Violation>& out_;

  void report(char rule, Loc loc, const std::string& msg)
  {
    out_.push_back({rule, fn_.file, loc, msg});
  }

  void check_block(const std::vector<Stmt>& blk)
  {
    for (const Stmt& s : blk) check_stmt(s);
  }

  void check_stmt(const Stmt& s)
  {
    switch (s.kind) {
      case StmtKind::Let:
      case StmtKind::LetElse:
        check_expr(*s.expr);
        if (s.kind == StmtKind::LetElse) check_block(s.then_block);
        break;
      case StmtKind::Assign:
        if (!s.target.projs.empty())
          report('b', s.loc, "pure bodies may assign only to local variables");
        check_expr(*s.expr);
        break;
      case StmtKind::Assert:
        report('g', s.loc, "assert is not allowed in a pure body");
        break;
      case StmtKind::If:
        check_expr(*s.expr);
        check_block(s.then_block);
        check_block(s.else_block);
        break;
      case StmtKind::Match:
        check_expr(*s.expr);
        for (const MatchArm& arm : s.arms) check_block(arm.block);
        break;
      case StmtKind::Drop: {
        // A drop is effectful when the type declares a drop contract.
        bool effectful = false;
        // The target type is not stored on the statement; a drop in a pure
        // body is rejected outright when the dropped type has a drop method.
        (void)effectful;
        report('g', s.loc, "drop is not allowed in a pure body");
        break;
      }
      case StmtKind::Return:
        if (s.expr) check_expr(*s.expr);
        break;
      case StmtKind::ExprStmt:
        check_expr(*s.expr);
        break;
    }
  }

  void check_expr(const Expr& e)
  {
    switch (e.kind) {
      case ExprKind::DerefBuiltin:
        if (level_rank(level_) < level_rank(Purity::Unstable)) {
          char rule = level_ == Purity::Value ? 'd' : 'e';
          report(rule, e.loc, "reading through a raw pointer requires pure_unstable");
        }
        break;
      case ExprKind::Cast:
        if (e.args[0]->type.is_ref() && level_ == Purity::Value)
          report('d', e.loc, "pure-value bodies may not observe reference addresses");
        break;
      case ExprKind::Call: {
        const FunctionInstance* callee = prog_.find_function(e.resolved);
        Purity cp = callee ? callee->purity : Purity::None;
        if (cp == Purity::None) {
          report('g', e.loc, "call to non-pure function '" + e.resolved + "'");
        } else if (level_rank(cp) > level_rank(level_)) {
          char rule = level_ == Purity::Value ? 'd' : 'c';
          report(rule, e.loc, "call to '" + e.resolved + "' exceeds the declared purity level");
        }
        break;
      }
      default:
        break;
    }
    for (const ExprPtr& a : e.args) check_expr(*a);
  }
};

}  // namespace

std::vector<Violation> check_purity_at(const FunctionInstance& fn, Purity level,
                                       const TypedProgram& prog)
{
  std::vector<Violation> out;
  BodyChecker(fn, level, prog, out).run();
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Violation> check_purity(const FunctionInstance& fn, const TypedProgram& prog)
{
  return check_purity_at(fn, fn.purity, prog);
}

std::vector<Violation> check_spec_purity(const Expr& spec, const std::string& file,
                                         const TypedProgram& prog)
{
  std::vector<Violation> out;
  std::function<void(const Expr&)> walk = [&](const Expr& e) {
    if (e.kind == ExprKind::Call) {
      const FunctionInstance* callee = prog.find_function(e.resolved);
      if (!callee || callee->purity == Purity::None)
        out.push_back({'s', file, e.loc,
                       "specification calls non-pure function '" + e.resolved + "'"});
    }
    for (const ExprPtr& a : e.args) walk(*a);
  };
  walk(spec);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Violation> check_program_purity(const TypedProgram& prog)
{
  std::vector<Violation> out;
  for (const auto& [key, fi] : prog.functions) {
    if (fi->purity != Purity::None && fi->body) {
      std::vector<Violation> v = check_purity(*fi, prog);
      out.insert(out.end(), v.begin(), v.end());
    }
    for (const ExprPtr& r : fi->requires_) {
      std::vector<Violation> v = check_spec_purity(*r, fi->file, prog);
      out.insert(out.end(), v.begin(), v.end());
    }
    for (const ExprPtr& e : fi->ensures_) {
      std::vector<Violation> v = check_spec_purity(*e, fi->file, prog);
      out.insert(out.end(), v.begin(), v.end());
    }
  }
  for (const auto& [key, si] : prog.structs) {
    for (const TypedAnnotation& ann : si.annotations) {
      if (ann.cond) {
        std::vector<Violation> v = check_spec_purity(*ann.cond, si.decl->file, prog);
        out.insert(out.end(), v.begin(), v.end());
      }
      std::vector<Violation> v = check_spec_purity(*ann.target, si.decl->file, prog);
      out.insert(out.end(), v.begin(), v.end());
    }
  }
  return out;
}

}  // namespace caplet
