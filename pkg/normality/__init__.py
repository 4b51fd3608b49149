"""Conditional-second-moment normality testing for fat-tailed data."""
