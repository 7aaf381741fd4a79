/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Minimizes the squared distance to `(tx, ty)` along the curve from the
     * projection of `(x, y)`. Returns iterates as `[x0, y0, x1, y1, ...]`;
     * `solver` is "gd" or "cg".
     */
    descend(x: number, y: number, tx: number, ty: number, solver: string, max_iters: number): Float64Array;
    fill_distance(): number;
    /**
     * `kind` is "circle" or "wave"; `noise` is a variance added to the
     * coordinates.
     */
    constructor(kind: string, n: number, noise: number, degree: number, seed: bigint);
    /**
     * Sample coordinates as `[x0, y0, x1, y1, ...]`.
     */
    points(): Float64Array;
    /**
     * `[px, py, tx, ty, support_count, frame_iterations]`: the projection
     * of `(x, y)` and a unit tangent there.
     */
    project(x: number, y: number): Float64Array;
    support_radius(): number;
}

/**
 * Weight profile `θ(t)` at `samples` evenly spaced `t` in `[0, 1.25 k h]`
 * with `h = 1`.
 */
export function weight_profile(k: number, samples: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_descend: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly demo_fill_distance: (a: number) => number;
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number, f: bigint) => [number, number, number];
    readonly demo_points: (a: number) => [number, number];
    readonly demo_project: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_support_radius: (a: number) => number;
    readonly weight_profile: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
