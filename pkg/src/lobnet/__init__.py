"""Limit order book price-movement prediction toolkit.

Submodules: ``book`` (order-book domain types), ``data`` (ingestion,
normalisation, labelling, windows, synthetic generator), ``nn`` (tensor
kernel with hand-rolled gradients), ``model`` (the classifier), ``train``,
``evaluation``, ``trading``, ``explain``, ``cli``.

The top-level package imports nothing heavy so the CLI can configure BLAS
threading before numpy loads.
"""

__version__ = "0.1.0"
