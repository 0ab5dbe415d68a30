"""Priors, per-k MCMC, evidence weighting and posterior diagnostics for d."""
