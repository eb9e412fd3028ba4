"""Exports tests/data/tiny.onnx: a linear head over per-channel means.

logit = 0.5 * mean(R) - 0.25 * mean(G) + 1.0 * mean(B) + 0.1
Input N x 3 x 504 x 504 (dynamic batch), output N logits.
"""
import sys

import torch


class MeanLinear(torch.nn.Module):
    def __init__(self):
        super().__init__()
        self.fc = torch.nn.Linear(3, 1)
        with torch.no_grad():
            self.fc.weight[:] = torch.tensor([[0.5, -0.25, 1.0]])
            self.fc.bias[:] = 0.1

    def forward(self, x):
        return self.fc(x.mean(dim=(2, 3))).squeeze(1)


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "tiny.onnx"
    torch.onnx.export(MeanLinear().eval(), torch.zeros(1, 3, 504, 504), out,
                      input_names=["x"], output_names=["logit"], opset_version=11, dynamo=False,
                      dynamic_axes={"x": {0: "n"}, "logit": {0: "n"}})
