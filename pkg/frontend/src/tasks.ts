// Serializes the async work a view starts from event handlers, so tests
// can await settled() instead of polling the DOM.

export class Tasks {
  private chain: Promise<void> = Promise.resolve();

  run(task: () => Promise<void>): Promise<void> {
    const next = this.chain.then(task, task);
    this.chain = next.catch(() => undefined);
    return next;
  }

  settled(): Promise<void> {
    return this.chain;
  }
}
