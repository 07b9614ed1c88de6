"""Plan execution against federation members.

Request strategy:

* an exclusive group is one conjunctive SELECT to its member;
* the first leaf of a join is sent unbound to each of its sources;
* every later leaf is a bound join: one request per (input row, source);
* a conjunctive OPTIONAL is bound to the rows on its left the same way;
* unions run their branches concurrently; FILTER and the solution
  modifiers are applied locally.
"""

from __future__ import annotations

import threading
from concurrent.futures import Executor, Future, ThreadPoolExecutor
from typing import Callable, Optional

from ..federation import EndpointError, Federation
from ..rdf.store import BindingRow
from ..rdf.terms import Term, Variable
from ..sparql.ast import BGP, BinOp, Call, Expr, Filter, Not, Query, conjunction
from ..sparql.evaluate import (
    SolutionSeq, apply_modifiers, filter_rows, join_rows, left_join_rows,
)
from ..sparql.expressions import TRUE, holds
from .planner import (
    EmptyNode, ExclusiveGroup, FilterNode, JoinNode, LeftJoinNode, ModifierNode,
    PatternNode, PlanNode, QueryPlan, UnionNode,
)
from .trace import ExecutionTrace, MediationError


def bind_expr(expr: Expr, row: BindingRow) -> Expr:
    """Substitute bound variables; ``bound(?x)`` folds to a constant."""
    if isinstance(expr, Variable):
        return row.get(expr.name, expr)
    if isinstance(expr, BinOp):
        return BinOp(expr.op, bind_expr(expr.left, row), bind_expr(expr.right, row))
    if isinstance(expr, Not):
        return Not(bind_expr(expr.arg, row))
    if isinstance(expr, Call):
        if expr.name == "bound":
            if expr.args[0].name in row:
                return TRUE
            return expr
        return Call(expr.name, tuple(bind_expr(a, row) for a in expr.args))
    return expr


def subquery(node, row: Optional[BindingRow] = None) -> Query:
    """SELECT * over a leaf, instantiated with ``row`` when given."""
    patterns = node.patterns if row is None else tuple(tp.bind(row) for tp in node.patterns)
    where = BGP(patterns)
    filters = getattr(node, "filters", None)
    if filters:
        expr = conjunction(filters)
        where = Filter(where, expr if row is None else bind_expr(expr, row))
    return Query("SELECT", where)


def _merge(row: BindingRow, extra: BindingRow) -> Optional[BindingRow]:
    for k, v in extra.items():
        w = row.get(k)
        if w is not None and w != v:
            return None
    return {**row, **extra}


class PlanExecutor:
    def __init__(self, federation: Federation, pool: Executor, trace: ExecutionTrace):
        self.federation = federation
        self.pool = pool
        self.trace = trace
        self._failed = threading.Event()

    # requests

    def _request(self, endpoint_id: str, query: Query) -> SolutionSeq:
        if self._failed.is_set():
            raise MediationError("query aborted after an earlier request failed")
        self.trace.count_select(endpoint_id)
        try:
            return self.federation[endpoint_id].select(query)
        except EndpointError:
            self._failed.set()
            raise

    def _gather(self, calls: list[tuple[str, Query]]) -> list[SolutionSeq]:
        """Run requests on the bounded pool; results in submission order."""
        futures: list[Future] = [self.pool.submit(self._request, eid, q) for eid, q in calls]
        results = []
        error = None
        for f in futures:
            try:
                results.append(f.result())
            except Exception as exc:  # noqa: BLE001 - first failure re-raised below
                error = error or exc
        if error is not None:
            if isinstance(error, MediationError):
                raise error
            raise MediationError(f"member request failed: {error}", self.trace) from error
        return results

    # evaluation

    def run(self, plan: QueryPlan) -> SolutionSeq:
        return self.eval_modifiers(plan.root)

    def eval_modifiers(self, node: ModifierNode) -> SolutionSeq:
        return apply_modifiers(self.eval(node.child), node.query)

    def eval(self, node: PlanNode) -> list[BindingRow]:
        if isinstance(node, JoinNode):
            return self.eval_join(node)
        if isinstance(node, (PatternNode, ExclusiveGroup)):
            return self.eval_leaf(node)
        if isinstance(node, EmptyNode):
            return []
        if isinstance(node, UnionNode):
            left, right = self._concurrently(lambda: self.eval(node.left),
                                             lambda: self.eval(node.right))
            return left + right
        if isinstance(node, LeftJoinNode):
            left = self.eval(node.left)
            if not left:
                return []
            right = node.right
            if isinstance(right, JoinNode) and right.children and all(
                    isinstance(c, (PatternNode, ExclusiveGroup)) for c in right.children):
                return self.bound_optional(left, right, node.condition)
            return left_join_rows(left, self.eval(right), node.condition)
        if isinstance(node, FilterNode):
            return filter_rows(self.eval(node.inner), node.expr)
        if isinstance(node, ModifierNode):
            return self.eval_modifiers(node).rows
        raise TypeError(f"unknown plan node {node!r}")

    def _concurrently(self, *thunks: Callable[[], list]) -> list[list]:
        results: list = [None] * len(thunks)
        errors: list = []

        def run(i, fn):
            try:
                results[i] = fn()
            except BaseException as exc:  # noqa: BLE001 - re-raised in caller
                errors.append(exc)

        threads = [threading.Thread(target=run, args=(i, fn), daemon=True)
                   for i, fn in enumerate(thunks[1:], 1)]
        for t in threads:
            t.start()
        run(0, thunks[0])
        for t in threads:
            t.join()
        if errors:
            raise errors[0]
        return results

    def eval_leaf(self, node) -> list[BindingRow]:
        q = subquery(node)
        rows: list[BindingRow] = []
        for res in self._gather([(eid, q) for eid in node.sources]):
            rows.extend(res.rows)
        return rows

    def bound_join(self, node, rows: list[BindingRow]) -> list[BindingRow]:
        return [r for _, r in self._bound(node, list(enumerate(rows)))]

    def _bound(self, node, tagged: list[tuple[int, BindingRow]]) -> list[tuple[int, BindingRow]]:
        """Bound join that keeps the index of the input row each output came from."""
        calls = []
        owners = []
        for tag, row in tagged:
            q = subquery(node, row)
            for eid in node.sources:
                calls.append((eid, q))
                owners.append((tag, row))
        out = []
        for (tag, row), res in zip(owners, self._gather(calls)):
            for extra in res.rows:
                merged = _merge(row, extra)
                if merged is not None:
                    out.append((tag, merged))
        return out

    def bound_optional(self, left: list[BindingRow], right: JoinNode, condition) -> list[BindingRow]:
        """OPTIONAL over a conjunctive right side, instantiated per left row."""
        tagged = list(enumerate(left))
        for child in right.children:
            if not tagged:
                break
            tagged = self._bound(child, tagged)
        extensions: dict[int, list[BindingRow]] = {}
        for tag, row in tagged:
            if condition is None or holds(condition, row):
                extensions.setdefault(tag, []).append(row)
        out = []
        for i, row in enumerate(left):
            out.extend(extensions.get(i, [row]))
        return out

    def eval_join(self, node: JoinNode) -> list[BindingRow]:
        if any(isinstance(c, EmptyNode) for c in node.children):
            return []
        rows: Optional[list[BindingRow]] = None
        for child in node.children:
            if rows is not None and not rows:
                return []
            if isinstance(child, (PatternNode, ExclusiveGroup)):
                rows = self.eval_leaf(child) if rows is None else self.bound_join(child, rows)
            else:
                sub = self.eval(child)
                rows = sub if rows is None else join_rows(rows, sub)
        return [{}] if rows is None else rows


def execute(plan: QueryPlan, federation: Federation, *, parallelism: int = 16,
            pool: Optional[Executor] = None,
            trace: Optional[ExecutionTrace] = None) -> tuple[SolutionSeq, ExecutionTrace]:
    trace = trace if trace is not None else ExecutionTrace()
    own = pool is None
    pool = pool or ThreadPoolExecutor(max_workers=parallelism, thread_name_prefix="fedmesh-req")
    try:
        result = PlanExecutor(federation, pool, trace).run(plan)
    except MediationError as exc:
        exc.trace = trace
        trace.error = str(exc)
        raise
    except EndpointError as exc:
        trace.error = str(exc)
        raise MediationError(str(exc), trace) from exc
    finally:
        if own:
            pool.shutdown(wait=True)
    return result, trace
