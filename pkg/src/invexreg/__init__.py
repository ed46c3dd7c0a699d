"""Invexifying regularization for nonlinear least squares."""
