"""Toolkit for measuring how much precedent material tells us about case outcomes.

Pipeline: parse a citation-structured corpus, assemble conditioning inputs
(facts-only, precedent-arguments, precedent-facts), train or import
probabilistic outcome models, and estimate conditional mutual information
as a difference of cross-entropies, with permutation-test significance.
A synthetic corpus generator with exactly enumerable entropies validates
the whole chain.
"""

__version__ = "0.1.0"
