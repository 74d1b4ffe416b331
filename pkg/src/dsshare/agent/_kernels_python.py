"""Pure-numpy fallback for the MLP kernels in ``_kernels.pyx``.

Both backends share one calling convention. A network with layer sizes
``(d_in, h1, h2, 1)`` stores every parameter in one flat float64 vector laid
out as ``W1, b1, W2, b2, W3, b3`` with the weight matrices row-major
``(fan_in, fan_out)``. Hidden layers are ReLU, the output layer is linear.
Callers own every buffer; the kernels only write into them.
"""

import numpy as np

BACKEND = "python"


def unpack(theta, sizes):
    """Return ``(W1, b1, W2, b2, W3, b3)`` as views into ``theta``."""
    d_in, h1, h2, d_out = sizes
    shapes = ((d_in, h1), (h1,), (h1, h2), (h2,), (h2, d_out), (d_out,))
    views = []
    offset = 0
    for shape in shapes:
        size = int(np.prod(shape))
        views.append(theta[offset : offset + size].reshape(shape))
        offset += size
    return tuple(views)


def mlp_forward(theta, sizes, x, h1, h2, out):
    W1, b1, W2, b2, W3, b3 = unpack(theta, sizes)
    np.matmul(x, W1, out=h1)
    h1 += b1
    np.maximum(h1, 0.0, out=h1)
    np.matmul(h1, W2, out=h2)
    h2 += b2
    np.maximum(h2, 0.0, out=h2)
    out[:] = h2 @ W3[:, 0]
    out += b3[0]


def mlp_backward(theta, sizes, x, h1, h2, dout, grad, dx=None):
    W1, b1, W2, b2, W3, b3 = unpack(theta, sizes)
    gW1, gb1, gW2, gb2, gW3, gb3 = unpack(grad, sizes)

    gW3[:, 0] = h2.T @ dout
    gb3[0] = dout.sum()

    delta2 = np.outer(dout, W3[:, 0])
    delta2 *= h2 > 0.0
    np.matmul(h1.T, delta2, out=gW2)
    gb2[:] = delta2.sum(axis=0)

    delta1 = delta2 @ W2.T
    delta1 *= h1 > 0.0
    np.matmul(x.T, delta1, out=gW1)
    gb1[:] = delta1.sum(axis=0)

    if dx is not None:
        np.matmul(delta1, W1.T, out=dx)
