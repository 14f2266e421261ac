/* tslint:disable */
/* eslint-disable */

/**
 * Uniform-endpoint exit density on the face opposite the entry face for
 * lengths in `[lo, hi]`, row-major on a `grid` x `grid` cell map.
 */
export function band_map(x1: number, x2: number, x3: number, lo: number, hi: number, grid: number): Float64Array;

/**
 * Box diagonal: the length axis of the densities below spans `[0, diagonal]`.
 */
export function diagonal(x1: number, x2: number, x3: number): number;

/**
 * Sampled length density on the same cells as [`single_face_pdf`].
 */
export function sample_lengths(x1: number, x2: number, x3: number, case_name: string, seed: bigint, samples: number, bins: number): Float64Array;

/**
 * Analytic length density on `bins` equal cells of `[0, diagonal]`.
 */
export function single_face_pdf(x1: number, x2: number, x3: number, case_name: string, bins: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly band_map: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly diagonal: (a: number, b: number, c: number) => [number, number, number];
    readonly sample_lengths: (a: number, b: number, c: number, d: number, e: number, f: bigint, g: number, h: number) => [number, number, number, number];
    readonly single_face_pdf: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
