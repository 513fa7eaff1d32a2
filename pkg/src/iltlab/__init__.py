"""Numerical laboratory for derivative intersection local time of two independent fBms."""
