/**
 * Deterministic action schedule shared with the Python test harness.
 *
 * Multiplicative congruential generator whose intermediate products stay
 * below 2**53, so plain number arithmetic reproduces it exactly.
 */

const ACTION_WIDTH = 12;

export function traceActions(step: number): number[] {
  const out: number[] = [];
  let x = ((step * 2654435761) % 2147483646) + 1;
  for (let i = 0; i < ACTION_WIDTH; i++) {
    x = (x * 48271) % 2147483647;
    out.push((x / 2147483647) * 0.4 - 0.2);
  }
  return out;
}
