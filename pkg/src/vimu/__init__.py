"""Virtual IMU synthesis from skinned body motion and activity recognition.

Subpackages and modules:

- ``kinematics``: linear-blend-skinning body model and forward kinematics
- ``sensors``: virtual IMU placement, orientation and acceleration synthesis
- ``pipeline``: filtering, up-sampling, windowing, normalization, splits
- ``net``: from-scratch convolutional classifier with a reconstruction
  penalty, trained by analytic backprop; FC-only fine-tuning
- ``metrics``: confusion matrices, accuracy and micro-F1
- ``fileio``: binary file formats (header line + raw blocks)
- ``cli``: the ``vimu`` command-line front end
"""

__version__ = "0.1.0"
