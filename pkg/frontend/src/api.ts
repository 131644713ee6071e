// Thin typed client over the server's REST API. Every UI action goes
// through here; nothing else talks to the network.

import type { PoseEvent } from "./poselog.js";
import type { Envelope } from "./waveform.js";
import type { PoseWire, ReplayToken } from "./replay.js";

export class ApiError extends Error {
	constructor(public status: number, public detail: string) {
		super(`HTTP ${status}: ${detail}`);
	}
}

export interface ServerConfig {
	waveform_bins: number;
	heartbeat_ms: number;
	success_threshold_m: number;
	lease_minutes: number;
}

export interface SessionInfo {
	session_id: string;
	state: string;
	kind: string;
	worker_id: string;
	task: {
		task_id: string;
		environment_id: string;
		kind: string;
		payload: any;
		[key: string]: any;
	};
}

export interface Instruction {
	kind: "text" | "audio";
	text?: string;
	audio?: ArrayBuffer;
}

export interface ReplayBundle {
	annotation: any;
	pose_trace: PoseWire[];
	timed_transcript: ReplayToken[] | null;
	path: string[];
	eval: any | null;
}

export class PangeaClient {
	constructor(private baseUrl: string,
		private fetchFn: typeof fetch = fetch.bind(globalThis)) { }

	private async go(method: string, path: string, body?: unknown,
		raw?: Uint8Array): Promise<Response> {
		let init: RequestInit = { method };
		if (raw !== undefined) {
			init.body = raw as BodyInit;
			init.headers = { "content-type": "application/octet-stream" };
		} else if (body !== undefined) {
			init.body = JSON.stringify(body);
			init.headers = { "content-type": "application/json" };
		}
		let resp = await this.fetchFn(this.baseUrl + path, init);
		if (!resp.ok) {
			let detail = "";
			try {
				let parsed = await resp.json();
				detail = typeof parsed.detail === "string"
					? parsed.detail : JSON.stringify(parsed);
			} catch {
				detail = resp.statusText;
			}
			throw new ApiError(resp.status, detail);
		}
		return resp;
	}

	private async json<T>(method: string, path: string, body?: unknown): Promise<T> {
		return (await this.go(method, path, body)).json() as Promise<T>;
	}

	health(): Promise<{ status: string }> {
		return this.json("GET", "/api/health");
	}

	config(): Promise<ServerConfig> {
		return this.json("GET", "/api/config");
	}

	graphDocument(env: string): Promise<any> {
		return this.json("GET", `/api/environments/${encodeURIComponent(env)}/graph`);
	}

	panoramaUrl(env: string, node: string): string {
		return `${this.baseUrl}/api/environments/${encodeURIComponent(env)}`
			+ `/pano/${encodeURIComponent(node)}`;
	}

	createSession(workerId: string, kind: "guide" | "follower"): Promise<SessionInfo> {
		return this.json("POST", "/api/sessions", { worker_id: workerId, kind });
	}

	getSession(id: string): Promise<SessionInfo> {
		return this.json("GET", `/api/sessions/${id}`);
	}

	async postEvents(id: string, seq: number, events: PoseEvent[]): Promise<number> {
		let out = await this.json<{ accepted_through_seq: number }>(
			"POST", `/api/sessions/${id}/events`, { seq, events });
		return out.accepted_through_seq;
	}

	action(id: string, name: "start-recording" | "pause" | "resume"
		| "stop-recording"): Promise<{ state: string }> {
		return this.json("POST", `/api/sessions/${id}/${name}`);
	}

	async uploadChunk(id: string, index: number, bytes: Uint8Array): Promise<void> {
		await this.go("PUT", `/api/sessions/${id}/audio/${index}`, undefined, bytes);
	}

	finalizeAudio(id: string, totalChunks: number):
		Promise<{ audio_key: string; size_bytes: number; content_hash: string }> {
		return this.json("POST", `/api/sessions/${id}/audio/finalize`,
			{ total_chunks: totalChunks });
	}

	setTranscript(id: string, text: string): Promise<unknown> {
		return this.json("POST", `/api/sessions/${id}/transcript`, { text });
	}

	submit(id: string): Promise<{ annotation_id: string }> {
		return this.json("POST", `/api/sessions/${id}/submit`);
	}

	async instruction(id: string): Promise<Instruction> {
		let resp = await this.go("GET", `/api/sessions/${id}/instruction`);
		let type = resp.headers.get("content-type") ?? "";
		if (type.includes("application/json")) {
			let body = await resp.json();
			return { kind: "text", text: body.text };
		}
		return { kind: "audio", audio: await resp.arrayBuffer() };
	}

	waveform(id: string): Promise<Envelope> {
		return this.json("GET", `/api/sessions/${id}/waveform`);
	}

	complete(id: string, outcome: "done" | "gave_up"): Promise<{ annotation_id: string }> {
		return this.json("POST", `/api/sessions/${id}/complete`, { outcome });
	}

	annotation(id: string): Promise<any> {
		return this.json("GET", `/api/annotations/${id}`);
	}

	replay(id: string): Promise<ReplayBundle> {
		return this.json("GET", `/api/annotations/${id}/replay`);
	}

	dashboard(env?: string): Promise<any> {
		let suffix = env ? `?environment_id=${encodeURIComponent(env)}` : "";
		return this.json("GET", `/api/dashboard/summary${suffix}`);
	}
}
