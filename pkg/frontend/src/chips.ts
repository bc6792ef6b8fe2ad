/** Morpheme-chip view models: a '+'-joined tag string becomes one chip per
 * morpheme, with the positions where the two analyses differ emphasized. */

export interface Chip {
  tag: string;
  differs: boolean;
}

/** "--" marks a side that produced no analysis (zero morphemes). */
export const ABSENT_ANALYSIS = '--';

export function splitTags(pattern: string): string[] {
  if (pattern === '' || pattern === ABSENT_ANALYSIS) return [];
  return pattern.split('+');
}

export interface ChipPair {
  left: Chip[];
  right: Chip[];
  lengthMismatch: boolean;
}

export function buildChipPair(leftPattern: string, rightPattern: string): ChipPair {
  const left = splitTags(leftPattern);
  const right = splitTags(rightPattern);
  const lengthMismatch = left.length !== right.length;
  if (!lengthMismatch) {
    return {
      left: left.map((tag, i) => ({ tag, differs: tag !== right[i] })),
      right: right.map((tag, i) => ({ tag, differs: tag !== left[i] })),
      lengthMismatch,
    };
  }
  // different segmentations: emphasize everything outside the common
  // prefix/suffix so the inserted or dropped morphemes stand out
  const shorter = Math.min(left.length, right.length);
  let prefix = 0;
  while (prefix < shorter && left[prefix] === right[prefix]) prefix += 1;
  let suffix = 0;
  while (
    suffix < shorter - prefix &&
    left[left.length - 1 - suffix] === right[right.length - 1 - suffix]
  ) {
    suffix += 1;
  }
  const mark = (tags: string[]): Chip[] =>
    tags.map((tag, i) => ({ tag, differs: i >= prefix && i < tags.length - suffix }));
  return { left: mark(left), right: mark(right), lengthMismatch };
}
