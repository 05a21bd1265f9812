"""Quasistatic viscoelastic frictional contact: FE discretization in space,
implicit velocity stepping in time, and a derivative-free nonsmooth minimizer
for the per-step energy functional."""

__version__ = "0.1.0"
