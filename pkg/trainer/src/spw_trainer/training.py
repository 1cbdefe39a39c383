"""Training loop for DigitNet.

Weight dropout (DropConnect) is applied to every weight matrix during
training: masked weights are rescaled by 1/(1-p), so the trained tensors
deploy directly without any inference-time correction. The point is fault
robustness: a model that learned under random weight erasure keeps ranking
classes correctly when masked-out parameters read as zero in the field.
"""

import numpy as np
import torch
import torch.nn.functional as F

from .network import DigitNet


def _drop(weight, p, gen):
    if p <= 0.0:
        return weight
    keep = (torch.rand(weight.shape, generator=gen) >= p).to(weight.dtype)
    return weight * keep / (1.0 - p)


def forward_with_weight_dropout(model, x, p, gen):
    x = F.pad(x, (1, 2, 1, 2))
    x = F.relu(F.conv2d(x, _drop(model.conv1.weight, p, gen),
                        model.conv1.bias))
    x = F.max_pool2d(x, 2)
    x = F.relu(F.conv2d(x, _drop(model.conv2.weight, p, gen),
                        model.conv2.bias))
    x = F.max_pool2d(x, 2)
    x = torch.flatten(x, 1)
    x = F.relu(F.linear(x, _drop(model.fc1.weight, p, gen), model.fc1.bias))
    x = F.relu(F.linear(x, _drop(model.fc2.weight, p, gen), model.fc2.bias))
    return F.linear(x, _drop(model.fc3.weight, p, gen), model.fc3.bias)


def float_accuracy(model, images, labels, batch_size=512):
    model.eval()
    correct = 0
    with torch.no_grad():
        for i in range(0, len(labels), batch_size):
            x = torch.from_numpy(
                images[i:i + batch_size].astype(np.float32) / 255.0)[:, None]
            pred = model(x).argmax(1).numpy()
            correct += int((pred == labels[i:i + batch_size]).sum())
    return correct / len(labels)


def train(images, labels, epochs, seed=0, batch_size=128, lr=1e-3,
          weight_dropout=0.25, log=print):
    """Train a DigitNet on uint8 images, deterministically per seed."""
    torch.manual_seed(seed)
    model = DigitNet()
    gen = torch.Generator().manual_seed(seed + 1)
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    sched = torch.optim.lr_scheduler.StepLR(
        opt, step_size=max(1, epochs // 3), gamma=0.5)
    x_all = torch.from_numpy(images.astype(np.float32) / 255.0)[:, None]
    y_all = torch.from_numpy(np.asarray(labels, np.int64))
    n = len(y_all)
    for epoch in range(epochs):
        model.train()
        order = torch.randperm(n, generator=gen)
        total = 0.0
        for i in range(0, n, batch_size):
            idx = order[i:i + batch_size]
            opt.zero_grad()
            out = forward_with_weight_dropout(
                model, x_all[idx], weight_dropout, gen)
            loss = F.cross_entropy(out, y_all[idx])
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
        sched.step()
        log(f"epoch {epoch + 1}/{epochs}  loss {total / n:.4f}")
    return model
