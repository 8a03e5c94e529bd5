/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    degrade(jitter: number, dropout: number, outliers: number, seed: number): void;
    /**
     * JSON-encoded estimate; `kind` is revolute, prismatic or auto.
     */
    estimate(kind: string): string;
    /**
     * Empty until `estimate` has run.
     */
    estimateSegment(): Float32Array;
    frameCount(): number;
    framePoints(index: number): Float32Array;
    /**
     * Template is one of door, drawer, lid, laptop, trashcan_lid.
     */
    constructor(template: string, seed: number, points: number, frames: number);
    /**
     * 1 for points on the moving part, 0 elsewhere.
     */
    restLabels(): Uint8Array;
    restPoints(): Float32Array;
    truthSegment(): Float32Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_degrade: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly demo_estimate: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_estimateSegment: (a: number) => [number, number];
    readonly demo_frameCount: (a: number) => number;
    readonly demo_framePoints: (a: number, b: number) => [number, number];
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly demo_restLabels: (a: number) => [number, number];
    readonly demo_restPoints: (a: number) => [number, number];
    readonly demo_truthSegment: (a: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
