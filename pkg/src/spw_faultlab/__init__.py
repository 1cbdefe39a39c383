"""Fault-tolerance lab for SECDED-protected quantized CNN inference.

The package layers up from codec to experiment:

* secded          -- SECDED(22,16) codec, scalar and vectorized
* fixedpoint      -- Q4.11 parameter / Q8.22 accumulator arithmetic
* nn_engine       -- bit-exact integer inference for the fixed topology
* protected_store -- parameter memory behind a protection policy
* fault_injector  -- Bernoulli bit-flip campaigns and the Metropolis chain
* model_io        -- weights container, image/label fixtures, manifests
* campaign        -- experiment grids, summaries, comparisons, reports
"""

__version__ = "0.1.0"
