"""Human-evaluation workbench for machine translation: single-sided and
side-by-side error annotation, relative ranking, and the meta-evaluation
suite over the collected annotations."""

__version__ = "0.1.0"
