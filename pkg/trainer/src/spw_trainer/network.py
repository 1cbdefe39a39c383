"""The 5-layer digit classifier, in trainable floating-point form.

Shapes mirror the deployed fixed-point model exactly: asymmetric zero
padding (1 top, 1 left, 2 bottom, 2 right) before the first convolution,
valid second convolution, floor max pooling, then three dense layers.
Flattening follows channel-major row order, the same layout the inference
engine expects.
"""

import torch
from torch import nn

LAYER_NAMES = ("conv1", "conv2", "fc1", "fc2", "fc3")


class DigitNet(nn.Module):

    def __init__(self):
        super().__init__()
        # ZeroPad2d takes (left, right, top, bottom)
        self.pad = nn.ZeroPad2d((1, 2, 1, 2))
        self.conv1 = nn.Conv2d(1, 8, 4)
        self.conv2 = nn.Conv2d(8, 16, 2)
        self.pool = nn.MaxPool2d(2)
        self.fc1 = nn.Linear(576, 120)
        self.fc2 = nn.Linear(120, 84)
        self.fc3 = nn.Linear(84, 10)
        self.relu = nn.ReLU()

    def forward(self, x):
        x = self.relu(self.conv1(self.pad(x)))
        x = self.pool(x)
        x = self.relu(self.conv2(x))
        x = self.pool(x)
        x = torch.flatten(x, 1)
        x = self.relu(self.fc1(x))
        x = self.relu(self.fc2(x))
        return self.fc3(x)

    def layer_tensors(self):
        """[(name, weight ndarray, bias ndarray)] in storage order."""
        out = []
        for name in LAYER_NAMES:
            mod = getattr(self, name)
            out.append((name,
                        mod.weight.detach().cpu().numpy(),
                        mod.bias.detach().cpu().numpy()))
        return out


def parameter_counts(model):
    return {name: (w.size, b.size) for name, w, b in model.layer_tensors()}
