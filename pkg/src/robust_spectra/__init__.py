"""Robust covariance spectra and smooth spectral cut-off PCA."""
