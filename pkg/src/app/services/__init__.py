"""Estimation services: models, Hankel pairs, dense kernels, estimator, metrics."""
