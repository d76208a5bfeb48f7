/** Serialize a double exactly like Python's repr(float).
 *
 * The filter-spec file format writes floats with repr, so producing
 * byte-identical spec text from the browser needs the same rules:
 * shortest round-trip digits (which JS toExponential() also yields,
 * with the same closest/ties-to-even choice), fixed notation for
 * decimal exponents in [-4, 16), scientific otherwise with a signed
 * two-digit exponent, and a trailing ".0" on integral fixed values.
 */
export function pyFloatRepr(x: number): string {
  if (!Number.isFinite(x)) {
    throw new Error(`cannot serialize non-finite value ${x}`);
  }
  if (x === 0) {
    return Object.is(x, -0) ? "-0.0" : "0.0";
  }
  const neg = x < 0;
  const [mant, expStr] = Math.abs(x).toExponential().split("e");
  const digits = mant.replace(".", "");
  const e = parseInt(expStr, 10); // value = d0.d1d2... * 10^e

  let body: string;
  if (e >= -4 && e < 16) {
    if (e >= 0) {
      const intLen = e + 1;
      if (digits.length <= intLen) {
        body = digits.padEnd(intLen, "0") + ".0";
      } else {
        body = digits.slice(0, intLen) + "." + digits.slice(intLen);
      }
    } else {
      body = "0." + "0".repeat(-e - 1) + digits;
    }
  } else {
    const mantissa =
      digits.length > 1 ? digits[0] + "." + digits.slice(1) : digits;
    const absE = String(Math.abs(e)).padStart(2, "0");
    body = mantissa + "e" + (e < 0 ? "-" : "+") + absE;
  }
  return neg ? "-" + body : body;
}

/** Parse a float token the way Python float() does for repr output. */
export function parseFloatToken(tok: string): number {
  const t = tok.trim();
  if (!/^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$/.test(t)) {
    throw new Error(`bad float literal: ${JSON.stringify(tok)}`);
  }
  return Number(t);
}
