"""Training-side counterpart of the fault-injection lab.

Produces the artifacts the lab consumes: a Q4.11 weights container, IDX
image/label fixtures, and a manifest with golden fixed-point predictions.
Deliberately shares no code with the lab; the file formats are the contract.
"""

__version__ = "0.1.0"
