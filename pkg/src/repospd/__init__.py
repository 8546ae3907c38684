"""Repository-level merged code property graphs and security-patch classification.

The pipeline turns a pre/post snapshot pair of a C repository into a merged,
dependency-attached, change-sliced code property graph, and classifies the
patch with a two-branch model (graph attention over the merged graph, plus a
sequence model over the changed lines) trained with a two-phase schedule.
"""

__version__ = "0.1.0"
