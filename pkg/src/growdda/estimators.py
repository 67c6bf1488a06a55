"""scikit-learn style wrappers around edge selection and DDA."""

from __future__ import annotations

from typing import Optional, Sequence

from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .dda import ProblemInstance, interval_schedule, run_dda
from .design import SelectionProblem, greedy_result, projected_subgradient_solve
from .graph import CostModel, DynamicNetwork, Graph


def _check_graph(graph) -> Graph:
    if not isinstance(graph, Graph):
        raise TypeError(f"expected a Graph, got {type(graph).__name__}")
    return graph


class EdgeSelector(TransformerMixin, BaseEstimator):
    """Pick candidate edges for a base graph; ``transform`` returns the augmented graph."""

    def __init__(self, gamma=0.0, mode="C1", k=None, method="subgradient", iters=2000, step_scale=0.2,
                 rho=0.5, tau1=10.0, tau2=0.5, d0=0.7, unit_costs=False, seed=0):
        self.gamma = gamma
        self.mode = mode
        self.k = k
        self.method = method
        self.iters = iters
        self.step_scale = step_scale
        self.rho = rho
        self.tau1 = tau1
        self.tau2 = tau2
        self.d0 = d0
        self.unit_costs = unit_costs
        self.seed = seed

    def fit(self, X, y=None):
        graph = _check_graph(X)
        if self.method not in ("subgradient", "greedy"):
            raise ValueError("method must be 'subgradient' or 'greedy'")
        model = None if self.unit_costs else CostModel(self.tau1, self.tau2, self.d0)
        problem = SelectionProblem.from_graph(graph, gamma=self.gamma, mode=self.mode,
                                              k=self.k if self.mode == "C2" else None, cost_model=model)
        if self.method == "greedy":
            if self.k is None:
                raise ValueError("greedy selection needs k")
            res = greedy_result(problem, int(self.k), seed=self.seed)
        else:
            res = projected_subgradient_solve(problem, step_scale=self.step_scale, iters=self.iters,
                                              rho=self.rho, seed=self.seed)
        self.problem_ = problem
        self.result_ = res
        self.selected_edges_ = list(res.selected_edges)
        self.base_ = graph
        return self

    def transform(self, X):
        check_is_fitted(self, "result_")
        graph = _check_graph(X)
        if graph != self.base_:
            raise ValueError("transform expects the graph the selector was fitted on")
        return graph.with_edges(self.selected_edges_)


class DDARegressor(RegressorMixin, BaseEstimator):
    """Least-absolute-deviation regression over a network, one sample per agent.

    Row ``i`` of ``X`` and ``y[i]`` are held by agent ``i`` of ``graph``. After
    ``fit``, ``coef_`` is the agents' average running estimate and
    ``agent_coefs_`` holds each agent's own.
    """

    def __init__(self, graph: Optional[Graph] = None, T=5000, R=5.0, a=None,
                 schedule: Sequence = (), Delta=1, checkpoint_every=None):
        self.graph = graph
        self.T = T
        self.R = R
        self.a = a
        self.schedule = schedule
        self.Delta = Delta
        self.checkpoint_every = checkpoint_every

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        graph = _check_graph(self.graph)
        if X.shape[0] != graph.n:
            raise ValueError(f"X has {X.shape[0]} rows but the graph has {graph.n} agents")
        inst = ProblemInstance(X, y, R=float(self.R))
        net = DynamicNetwork(graph, tuple(interval_schedule(list(self.schedule), int(self.Delta), int(self.T))))
        traj = run_dda(inst, net, int(self.T), a=self.a, checkpoint_every=self.checkpoint_every)
        self.trajectory_ = traj
        self.agent_coefs_ = traj.xbar_final
        self.coef_ = traj.xbar_final.mean(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X @ self.coef_
