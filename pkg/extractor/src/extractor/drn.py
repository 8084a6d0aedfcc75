"""26-layer dilated residual network (stride-8 output).

Mirrors the published DRN-C-26 layout — layer0..layer8 with basic blocks,
channel widths (16, 32, 64, 128, 256, 512, 512, 512) and dilations growing
to 4 then decaying — so released ImageNet checkpoints load directly via
``load_state_dict``.  The classifier head (global pool + 1x1 conv) is kept
only for checkpoint compatibility; feature export stops at the last
convolutional block.
"""

from __future__ import annotations

import torch
import torch.nn as nn


def conv3x3(in_planes, out_planes, stride=1, padding=1, dilation=1):
    return nn.Conv2d(in_planes, out_planes, kernel_size=3, stride=stride,
                     padding=padding, dilation=dilation, bias=False)


class BasicBlock(nn.Module):
    expansion = 1

    def __init__(self, inplanes, planes, stride=1, downsample=None,
                 dilation=(1, 1), residual=True):
        super().__init__()
        self.conv1 = conv3x3(inplanes, planes, stride,
                             padding=dilation[0], dilation=dilation[0])
        self.bn1 = nn.BatchNorm2d(planes)
        self.relu = nn.ReLU(inplace=True)
        self.conv2 = conv3x3(planes, planes,
                             padding=dilation[1], dilation=dilation[1])
        self.bn2 = nn.BatchNorm2d(planes)
        self.downsample = downsample
        self.residual = residual

    def forward(self, x):
        identity = x
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        if self.downsample is not None:
            identity = self.downsample(x)
        if self.residual:
            out = out + identity
        return self.relu(out)


class DRN26(nn.Module):
    """DRN-C-26: 25 convolutions plus the classifier, output stride 8."""

    channels = (16, 32, 64, 128, 256, 512, 512, 512)
    blocks = (1, 1, 2, 2, 2, 2, 1, 1)

    def __init__(self, num_classes=1000):
        super().__init__()
        self.inplanes = self.channels[0]
        self.layer0 = nn.Sequential(
            nn.Conv2d(3, self.channels[0], kernel_size=7, stride=1,
                      padding=3, bias=False),
            nn.BatchNorm2d(self.channels[0]),
            nn.ReLU(inplace=True),
        )
        self.layer1 = self._make_layer(self.channels[0], self.blocks[0], stride=1)
        self.layer2 = self._make_layer(self.channels[1], self.blocks[1], stride=2)
        self.layer3 = self._make_layer(self.channels[2], self.blocks[2], stride=2)
        self.layer4 = self._make_layer(self.channels[3], self.blocks[3], stride=2)
        self.layer5 = self._make_layer(self.channels[4], self.blocks[4],
                                       dilation=2, new_level=False)
        self.layer6 = self._make_layer(self.channels[5], self.blocks[5],
                                       dilation=4, new_level=False)
        self.layer7 = self._make_layer(self.channels[6], self.blocks[6],
                                       dilation=2, new_level=False, residual=False)
        self.layer8 = self._make_layer(self.channels[7], self.blocks[7],
                                       dilation=1, new_level=False, residual=False)
        self.avgpool = nn.AdaptiveAvgPool2d(1)
        self.fc = nn.Conv2d(self.channels[7], num_classes, kernel_size=1)

    def _make_layer(self, planes, blocks, stride=1, dilation=1,
                    new_level=True, residual=True):
        downsample = None
        if stride != 1 or self.inplanes != planes:
            downsample = nn.Sequential(
                nn.Conv2d(self.inplanes, planes, kernel_size=1,
                          stride=stride, bias=False),
                nn.BatchNorm2d(planes),
            )
        first_dilation = (
            (1, 1) if dilation == 1
            else (dilation // 2 if new_level else dilation, dilation)
        )
        layers = [BasicBlock(self.inplanes, planes, stride, downsample,
                             dilation=first_dilation, residual=residual)]
        self.inplanes = planes
        for _ in range(1, blocks):
            layers.append(BasicBlock(self.inplanes, planes,
                                     dilation=(dilation, dilation),
                                     residual=residual))
        return nn.Sequential(*layers)

    def features(self, x):
        """Last-layer feature map before global pooling: (N, 512, H/8, W/8)."""
        for name in ("layer0", "layer1", "layer2", "layer3", "layer4",
                     "layer5", "layer6", "layer7", "layer8"):
            x = getattr(self, name)(x)
        return x

    def forward(self, x):
        x = self.avgpool(self.features(x))
        return self.fc(x).flatten(1)


def load_pretrained(model: nn.Module, weights_path) -> None:
    """Load a checkpoint; accepts raw state dicts or {'state_dict': ...}
    wrappers, tolerating 'module.' DataParallel prefixes."""
    state = torch.load(weights_path, map_location="cpu", weights_only=True)
    if isinstance(state, dict) and "state_dict" in state:
        state = state["state_dict"]
    state = {k.removeprefix("module."): v for k, v in state.items()}
    model.load_state_dict(state)
